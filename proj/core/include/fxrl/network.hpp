#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fxrl/rng.hpp"
#include "fxrl/tensor.hpp"
#include "fxrl/trading_env.hpp"

namespace fxrl::nn {

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Surfaced when a forward or backward pass produces NaN or infinity.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimensions of both stacks. The actor and the critic share this topology
// and differ only in head width (3 action logits vs 1 value).
//
//   features [window x 5] -> LSTM(hidden), final hidden state
//     -> fc1 (hidden -> 32), relu
//     -> concat with one-hot action history [window * 3]
//     -> fc2 (-> 64), relu -> fc3 (-> 64), relu -> head
struct NetworkConfig {
    std::size_t feature_dim = 5;
    std::size_t hidden = 128;
    std::size_t window = 16;
    std::size_t fc1_out = 32;
    std::size_t fc2_out = 64;
    std::size_t fc3_out = 64;
    std::size_t num_actions = 3;

    std::size_t history_dim() const { return window * num_actions; }
    std::size_t fc2_in() const { return fc1_out + history_dim(); }

    bool operator==(const NetworkConfig&) const = default;
};

// Parameter names per stack, prefixed "actor." or "critic.":
//   lstm.w_ih [4H x 5], lstm.w_hh [4H x H], lstm.b [4H]  (gate order i,f,g,o)
//   fc1.w, fc1.b, fc2.w, fc2.b, fc3.w, fc3.b, head.w, head.b
std::map<std::string, std::vector<std::size_t>> expected_shapes(const NetworkConfig& cfg);

TensorMap zero_params(const NetworkConfig& cfg);

// Candle features are price ratios, natively around 1e-3 for hourly data,
// so the LSTM input weights start this much larger than the plain fan-in
// bound. That puts gate pre-activations on the O(0.1) scale a unit-variance
// input would produce and keeps the feature pathway trainable next to the
// O(1) one-hot action history.
inline constexpr double kFeatureWeightGain = 100.0;

// Fan-in scaled uniform weights (lstm.w_ih additionally scaled by
// kFeatureWeightGain), zero biases except the LSTM forget-gate block which
// starts at 1.0. Draw order follows the sorted parameter names, so a seed
// pins every value.
TensorMap init_params(const NetworkConfig& cfg, Rng& rng);

// Throws NetworkError naming the first tensor whose shape (or presence)
// disagrees with the config.
void validate_shapes(const TensorMap& params, const NetworkConfig& cfg);

bool all_finite(const TensorMap& m);

struct PolicyOutput {
    std::vector<double> logits;
    std::vector<double> probs;
    std::vector<double> log_probs;
    double entropy = 0.0; // nats
};

// Cached forward activations of one stack; backward_* consumes them.
struct StackTape {
    std::vector<double> x;       // window * feature_dim inputs
    std::vector<double> hist;    // window * num_actions
    std::vector<double> gi, gf, gg, go; // gate activations, window * hidden each
    std::vector<double> c;       // cell states, window * hidden
    std::vector<double> tanh_c;  // tanh of cell states
    std::vector<double> h;       // hidden states, window * hidden
    std::vector<double> fc1_pre, fc1_act;
    std::vector<double> concat;
    std::vector<double> fc2_pre, fc2_act;
    std::vector<double> fc3_pre, fc3_act;
    std::vector<double> head;
};

// Forward passes. The tape pointer may be null when only the output is
// needed (action sampling, greedy rollouts).
PolicyOutput forward_actor(const TensorMap& params, const NetworkConfig& cfg,
                           const env::Observation& obs, StackTape* tape = nullptr);
double forward_critic(const TensorMap& params, const NetworkConfig& cfg,
                      const env::Observation& obs, StackTape* tape = nullptr);

// Reverse passes: seed is dLoss/dlogits (actor) or dLoss/dvalue (critic).
// Gradients accumulate into `grads` under the matching parameter names.
void backward_actor(const TensorMap& params, const NetworkConfig& cfg,
                    const StackTape& tape, const double* dlogits, TensorMap& grads);
void backward_critic(const TensorMap& params, const NetworkConfig& cfg,
                     const StackTape& tape, double dvalue, TensorMap& grads);

// Draws an action from the categorical policy; returns (action index,
// log probability of that action).
std::pair<int, double> sample_action(const PolicyOutput& policy, Rng& rng);

}
