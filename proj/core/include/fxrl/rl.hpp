#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fxrl/network.hpp"
#include "fxrl/trading_env.hpp"

namespace fxrl::rl {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct TrainConfig {
    double gamma = 0.99;
    double learning_rate = 4e-5;
    std::size_t total_steps = 1'000'000;
    std::size_t n_steps = 20;        // env steps per worker segment
    std::size_t workers = 5;
    double entropy_coef = 0.01;
    double clip_epsilon = 0.2;       // ppo ratio clip
    std::size_t ppo_epochs = 4;
    double value_loss_coef = 0.5;
    double grad_clip = 40.0;         // global gradient norm bound
    std::uint64_t seed = 1;
};

// n-step discounted returns, folded right to left from the bootstrap value
// (0 for a terminal tail).
std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double bootstrap, double gamma);

// A_i = R_i - V_i
std::vector<double> advantages(std::span<const double> returns,
                               std::span<const double> values);

// -(1/N) sum log_prob_i * A_i  (advantages are gradient constants)
double a3c_policy_loss(std::span<const double> log_probs,
                       std::span<const double> advantages);

// (1/N) sum (R_i - V_i)^2
double a3c_value_loss(std::span<const double> returns,
                      std::span<const double> values);

// Clipped-surrogate objective with entropy bonus:
// -(1/N) sum min(r*A, clamp(r, 1-eps, 1+eps)*A) - beta * (1/N) sum H_i
// where r = exp(new_lp - old_lp) and old_lp is a gradient constant.
double ppo_loss(std::span<const double> new_log_probs,
                std::span<const double> old_log_probs,
                std::span<const double> advantages,
                std::span<const double> entropies,
                double clip_epsilon, double entropy_coef);

// dLoss/dlogits for one step of the A3C policy term plus entropy bonus,
// already scaled by inv_n = 1/N. `out` has num_actions slots.
void policy_loss_logit_grad(const nn::PolicyOutput& policy, int action,
                            double advantage, double entropy_coef, double inv_n,
                            double* out);

// Same for the PPO clipped-surrogate term.
void ppo_loss_logit_grad(const nn::PolicyOutput& policy, int action,
                         double old_log_prob, double advantage,
                         double clip_epsilon, double entropy_coef, double inv_n,
                         double* out);

double global_norm(const TensorMap& grads);

// Scales gradients in place when their global norm exceeds max_norm.
// Returns the norm before clipping.
double clip_global_norm(TensorMap& grads, double max_norm);

struct AdamState {
    TensorMap m, v;
    std::uint64_t t = 0;
};

AdamState make_adam_state(const TensorMap& params);
void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, double lr);

// One on-policy trajectory slice: observations, sampled actions, rewards,
// plus the collection-time values and log probs that later become gradient
// constants. last_obs is the state after the final step, for bootstrapping.
struct Segment {
    env::EpisodeDescriptor descriptor;
    std::vector<env::Observation> obs;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<double> log_probs;
    env::Observation last_obs;
    bool terminal = false;

    std::size_t size() const { return actions.size(); }
    double reward_sum() const;
};

// Steps the policy for up to max_steps or until the episode ends, whichever
// comes first. The env must be reset and not done. with_values controls
// whether the critic runs during collection.
Segment collect_segment(env::TradingEnv& env, const TensorMap& params,
                        const nn::NetworkConfig& net, Rng& rng,
                        std::size_t max_steps, bool with_values);

struct LossStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Accumulates mean-normalized A3C gradients for both stacks over a segment
// into `grads`: policy term with entropy bonus on the actor, value MSE
// scaled by value_loss_coef on the critic.
LossStats a3c_gradients(const TensorMap& params, const nn::NetworkConfig& net,
                        const Segment& seg, const TrainConfig& cfg, TensorMap& grads);

// One PPO epoch worth of gradients over a rollout, with fixed returns and
// advantages from collection time.
LossStats ppo_gradients(const TensorMap& params, const nn::NetworkConfig& net,
                        const Segment& rollout, std::span<const double> returns,
                        std::span<const double> advs, const TrainConfig& cfg,
                        TensorMap& grads);

struct EpisodeRecord {
    std::size_t episode = 0;
    std::string pair;
    std::size_t start = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    double reward_sum = 0.0;
    double wall_ms = 0.0;
};

// Raised when training hits non-finite numbers; carries the parameters at
// the point of failure so callers can write a diagnostic checkpoint.
struct TrainAbort : std::runtime_error {
    TensorMap params;
    TrainAbort(const std::string& msg, TensorMap p)
        : std::runtime_error(msg), params(std::move(p)) {}
};

struct PpoResult {
    TensorMap params;
    std::vector<EpisodeRecord> log;
    std::uint64_t env_steps = 0;
};

// Single-threaded clipped-surrogate training: each rollout is one full
// episode, replayed for ppo_epochs optimizer steps. Runs whole episodes
// until total_steps is covered.
PpoResult run_ppo(const data::DatasetRegistry& registry, const env::EnvConfig& envcfg,
                  const nn::NetworkConfig& net, const TrainConfig& cfg);

}
