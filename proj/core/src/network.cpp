#include "fxrl/network.hpp"

#include <cmath>
#include <cstring>

namespace fxrl::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const Tensor& param(const TensorMap& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw NetworkError("missing parameter: " + name);
    return it->second;
}

Tensor& grad_slot(TensorMap& grads, const std::string& name, const Tensor& like) {
    auto it = grads.find(name);
    if (it == grads.end())
        it = grads.emplace(name, Tensor::zeros(like.shape)).first;
    return it->second;
}

void check_observation(const NetworkConfig& cfg, const env::Observation& obs) {
    if (obs.window != cfg.window ||
        obs.feature_rows.size() != cfg.window * cfg.feature_dim ||
        obs.action_history.size() != cfg.history_dim())
        throw NetworkError("observation does not match network window/shape");
}

// Shared forward through one stack. head_dim distinguishes actor (3) from
// critic (1).
void forward_stack(const TensorMap& params, const NetworkConfig& cfg,
                   const std::string& prefix, const env::Observation& obs,
                   std::size_t head_dim, StackTape& tape) {
    const std::size_t H = cfg.hidden;
    const std::size_t F = cfg.feature_dim;
    const std::size_t W = cfg.window;

    const Tensor& w_ih = param(params, prefix + "lstm.w_ih");
    const Tensor& w_hh = param(params, prefix + "lstm.w_hh");
    const Tensor& b = param(params, prefix + "lstm.b");

    tape.x = obs.feature_rows;
    tape.hist = obs.action_history;
    tape.gi.assign(W * H, 0.0);
    tape.gf.assign(W * H, 0.0);
    tape.gg.assign(W * H, 0.0);
    tape.go.assign(W * H, 0.0);
    tape.c.assign(W * H, 0.0);
    tape.tanh_c.assign(W * H, 0.0);
    tape.h.assign(W * H, 0.0);

    std::vector<double> z(4 * H);
    std::vector<double> zh(4 * H);
    for (std::size_t t = 0; t < W; ++t) {
        const double* x_t = tape.x.data() + t * F;
        const double* h_prev = t == 0 ? nullptr : tape.h.data() + (t - 1) * H;
        const double* c_prev = t == 0 ? nullptr : tape.c.data() + (t - 1) * H;

        matvec(w_ih, x_t, z.data());
        if (h_prev) {
            matvec(w_hh, h_prev, zh.data());
            for (std::size_t k = 0; k < 4 * H; ++k) z[k] += zh[k];
        }
        for (std::size_t k = 0; k < 4 * H; ++k) z[k] += b(k);

        double* gi = tape.gi.data() + t * H;
        double* gf = tape.gf.data() + t * H;
        double* gg = tape.gg.data() + t * H;
        double* go = tape.go.data() + t * H;
        double* c_t = tape.c.data() + t * H;
        double* tc = tape.tanh_c.data() + t * H;
        double* h_t = tape.h.data() + t * H;
        for (std::size_t k = 0; k < H; ++k) {
            gi[k] = sigmoid(z[k]);
            gf[k] = sigmoid(z[H + k]);
            gg[k] = std::tanh(z[2 * H + k]);
            go[k] = sigmoid(z[3 * H + k]);
            const double cp = c_prev ? c_prev[k] : 0.0;
            c_t[k] = gf[k] * cp + gi[k] * gg[k];
            tc[k] = std::tanh(c_t[k]);
            h_t[k] = go[k] * tc[k];
        }
    }

    const double* h_last = tape.h.data() + (W - 1) * H;

    tape.fc1_pre.assign(cfg.fc1_out, 0.0);
    matvec(param(params, prefix + "fc1.w"), h_last, tape.fc1_pre.data());
    const Tensor& b1 = param(params, prefix + "fc1.b");
    tape.fc1_act.resize(cfg.fc1_out);
    for (std::size_t k = 0; k < cfg.fc1_out; ++k) {
        tape.fc1_pre[k] += b1(k);
        tape.fc1_act[k] = tape.fc1_pre[k] > 0.0 ? tape.fc1_pre[k] : 0.0;
    }

    tape.concat.resize(cfg.fc2_in());
    std::memcpy(tape.concat.data(), tape.fc1_act.data(), cfg.fc1_out * sizeof(double));
    std::memcpy(tape.concat.data() + cfg.fc1_out, tape.hist.data(),
                cfg.history_dim() * sizeof(double));

    tape.fc2_pre.assign(cfg.fc2_out, 0.0);
    matvec(param(params, prefix + "fc2.w"), tape.concat.data(), tape.fc2_pre.data());
    const Tensor& b2 = param(params, prefix + "fc2.b");
    tape.fc2_act.resize(cfg.fc2_out);
    for (std::size_t k = 0; k < cfg.fc2_out; ++k) {
        tape.fc2_pre[k] += b2(k);
        tape.fc2_act[k] = tape.fc2_pre[k] > 0.0 ? tape.fc2_pre[k] : 0.0;
    }

    tape.fc3_pre.assign(cfg.fc3_out, 0.0);
    matvec(param(params, prefix + "fc3.w"), tape.fc2_act.data(), tape.fc3_pre.data());
    const Tensor& b3 = param(params, prefix + "fc3.b");
    tape.fc3_act.resize(cfg.fc3_out);
    for (std::size_t k = 0; k < cfg.fc3_out; ++k) {
        tape.fc3_pre[k] += b3(k);
        tape.fc3_act[k] = tape.fc3_pre[k] > 0.0 ? tape.fc3_pre[k] : 0.0;
    }

    tape.head.assign(head_dim, 0.0);
    matvec(param(params, prefix + "head.w"), tape.fc3_act.data(), tape.head.data());
    const Tensor& bh = param(params, prefix + "head.b");
    for (std::size_t k = 0; k < head_dim; ++k) {
        tape.head[k] += bh(k);
        if (!std::isfinite(tape.head[k]))
            throw NumericError("non-finite output in " + prefix + "head");
    }
}

void backward_stack(const TensorMap& params, const NetworkConfig& cfg,
                    const std::string& prefix, const StackTape& tape,
                    const double* dhead, std::size_t head_dim, TensorMap& grads) {
    const std::size_t H = cfg.hidden;
    const std::size_t F = cfg.feature_dim;
    const std::size_t W = cfg.window;

    const Tensor& w_ih = param(params, prefix + "lstm.w_ih");
    const Tensor& w_hh = param(params, prefix + "lstm.w_hh");
    const Tensor& w1 = param(params, prefix + "fc1.w");
    const Tensor& w2 = param(params, prefix + "fc2.w");
    const Tensor& w3 = param(params, prefix + "fc3.w");
    const Tensor& wh = param(params, prefix + "head.w");

    Tensor& g_w_ih = grad_slot(grads, prefix + "lstm.w_ih", w_ih);
    Tensor& g_w_hh = grad_slot(grads, prefix + "lstm.w_hh", w_hh);
    Tensor& g_b = grad_slot(grads, prefix + "lstm.b", param(params, prefix + "lstm.b"));
    Tensor& g_w1 = grad_slot(grads, prefix + "fc1.w", w1);
    Tensor& g_b1 = grad_slot(grads, prefix + "fc1.b", param(params, prefix + "fc1.b"));
    Tensor& g_w2 = grad_slot(grads, prefix + "fc2.w", w2);
    Tensor& g_b2 = grad_slot(grads, prefix + "fc2.b", param(params, prefix + "fc2.b"));
    Tensor& g_w3 = grad_slot(grads, prefix + "fc3.w", w3);
    Tensor& g_b3 = grad_slot(grads, prefix + "fc3.b", param(params, prefix + "fc3.b"));
    Tensor& g_wh = grad_slot(grads, prefix + "head.w", wh);
    Tensor& g_bh = grad_slot(grads, prefix + "head.b", param(params, prefix + "head.b"));

    // head -> fc3
    std::vector<double> d_a3(cfg.fc3_out, 0.0);
    matvec_transposed_add(wh, dhead, d_a3.data());
    outer_add(g_wh, dhead, tape.fc3_act.data());
    for (std::size_t k = 0; k < head_dim; ++k) g_bh(k) += dhead[k];

    // fc3 -> fc2
    std::vector<double> d_p3(cfg.fc3_out);
    for (std::size_t k = 0; k < cfg.fc3_out; ++k)
        d_p3[k] = tape.fc3_pre[k] > 0.0 ? d_a3[k] : 0.0;
    std::vector<double> d_a2(cfg.fc2_out, 0.0);
    matvec_transposed_add(w3, d_p3.data(), d_a2.data());
    outer_add(g_w3, d_p3.data(), tape.fc2_act.data());
    for (std::size_t k = 0; k < cfg.fc3_out; ++k) g_b3(k) += d_p3[k];

    // fc2 -> concat
    std::vector<double> d_p2(cfg.fc2_out);
    for (std::size_t k = 0; k < cfg.fc2_out; ++k)
        d_p2[k] = tape.fc2_pre[k] > 0.0 ? d_a2[k] : 0.0;
    std::vector<double> d_u(cfg.fc2_in(), 0.0);
    matvec_transposed_add(w2, d_p2.data(), d_u.data());
    outer_add(g_w2, d_p2.data(), tape.concat.data());
    for (std::size_t k = 0; k < cfg.fc2_out; ++k) g_b2(k) += d_p2[k];

    // fc1 part of the concat (the history half has no parameters upstream)
    std::vector<double> d_p1(cfg.fc1_out);
    for (std::size_t k = 0; k < cfg.fc1_out; ++k)
        d_p1[k] = tape.fc1_pre[k] > 0.0 ? d_u[k] : 0.0;
    const double* h_last = tape.h.data() + (W - 1) * H;
    std::vector<double> dh(H, 0.0);
    matvec_transposed_add(w1, d_p1.data(), dh.data());
    outer_add(g_w1, d_p1.data(), h_last);
    for (std::size_t k = 0; k < cfg.fc1_out; ++k) g_b1(k) += d_p1[k];

    // backprop through time
    std::vector<double> dc(H, 0.0);
    std::vector<double> dz(4 * H);
    std::vector<double> dh_prev(H);
    for (std::size_t ti = W; ti-- > 0;) {
        const double* gi = tape.gi.data() + ti * H;
        const double* gf = tape.gf.data() + ti * H;
        const double* gg = tape.gg.data() + ti * H;
        const double* go = tape.go.data() + ti * H;
        const double* tc = tape.tanh_c.data() + ti * H;
        const double* c_prev = ti == 0 ? nullptr : tape.c.data() + (ti - 1) * H;
        const double* h_prev = ti == 0 ? nullptr : tape.h.data() + (ti - 1) * H;
        const double* x_t = tape.x.data() + ti * F;

        for (std::size_t k = 0; k < H; ++k) {
            const double d_o = dh[k] * tc[k];
            const double d_c = dc[k] + dh[k] * go[k] * (1.0 - tc[k] * tc[k]);
            const double d_i = d_c * gg[k];
            const double d_g = d_c * gi[k];
            const double cp = c_prev ? c_prev[k] : 0.0;
            const double d_f = d_c * cp;
            dc[k] = d_c * gf[k]; // carries to step ti-1
            dz[k] = d_i * gi[k] * (1.0 - gi[k]);
            dz[H + k] = d_f * gf[k] * (1.0 - gf[k]);
            dz[2 * H + k] = d_g * (1.0 - gg[k] * gg[k]);
            dz[3 * H + k] = d_o * go[k] * (1.0 - go[k]);
        }

        outer_add(g_w_ih, dz.data(), x_t);
        if (h_prev) outer_add(g_w_hh, dz.data(), h_prev);
        for (std::size_t k = 0; k < 4 * H; ++k) g_b(k) += dz[k];

        if (ti > 0) {
            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
            matvec_transposed_add(w_hh, dz.data(), dh_prev.data());
            dh = dh_prev;
        }
    }
}

} // namespace

std::map<std::string, std::vector<std::size_t>> expected_shapes(const NetworkConfig& cfg) {
    std::map<std::string, std::vector<std::size_t>> shapes;
    for (const std::string& prefix : {std::string("actor."), std::string("critic.")}) {
        const std::size_t head = prefix == "actor." ? cfg.num_actions : 1;
        shapes[prefix + "lstm.w_ih"] = {4 * cfg.hidden, cfg.feature_dim};
        shapes[prefix + "lstm.w_hh"] = {4 * cfg.hidden, cfg.hidden};
        shapes[prefix + "lstm.b"] = {4 * cfg.hidden};
        shapes[prefix + "fc1.w"] = {cfg.fc1_out, cfg.hidden};
        shapes[prefix + "fc1.b"] = {cfg.fc1_out};
        shapes[prefix + "fc2.w"] = {cfg.fc2_out, cfg.fc2_in()};
        shapes[prefix + "fc2.b"] = {cfg.fc2_out};
        shapes[prefix + "fc3.w"] = {cfg.fc3_out, cfg.fc2_out};
        shapes[prefix + "fc3.b"] = {cfg.fc3_out};
        shapes[prefix + "head.w"] = {head, cfg.fc3_out};
        shapes[prefix + "head.b"] = {head};
    }
    return shapes;
}

TensorMap zero_params(const NetworkConfig& cfg) {
    TensorMap params;
    for (const auto& [name, shape] : expected_shapes(cfg))
        params.emplace(name, Tensor::zeros(shape));
    return params;
}

TensorMap init_params(const NetworkConfig& cfg, Rng& rng) {
    TensorMap params = zero_params(cfg);
    for (auto& [name, tensor] : params) {
        const bool is_weight = name.ends_with(".w") || name.find("w_") != std::string::npos;
        if (is_weight) {
            const double gain = name.ends_with("lstm.w_ih") ? kFeatureWeightGain : 1.0;
            const double bound = gain / std::sqrt(static_cast<double>(tensor.cols()));
            for (double& v : tensor.data) v = rng.uniform(-bound, bound);
        } else if (name.ends_with("lstm.b")) {
            // forget-gate block opens near 1 so early cell state survives
            for (std::size_t k = cfg.hidden; k < 2 * cfg.hidden; ++k) tensor(k) = 1.0;
        }
    }
    return params;
}

void validate_shapes(const TensorMap& params, const NetworkConfig& cfg) {
    const auto shapes = expected_shapes(cfg);
    for (const auto& [name, shape] : shapes) {
        auto it = params.find(name);
        if (it == params.end()) throw NetworkError("missing parameter: " + name);
        if (it->second.shape != shape) {
            auto fmt = [](const std::vector<std::size_t>& s) {
                std::string out = "[";
                for (std::size_t i = 0; i < s.size(); ++i)
                    out += (i ? " x " : "") + std::to_string(s[i]);
                return out + "]";
            };
            throw NetworkError(name + ": expected shape " + fmt(shape) + ", got " +
                               fmt(it->second.shape));
        }
    }
    for (const auto& [name, tensor] : params)
        if (!shapes.count(name)) throw NetworkError("unexpected parameter: " + name);
}

bool all_finite(const TensorMap& m) {
    for (const auto& [name, tensor] : m)
        if (!tensor.all_finite()) return false;
    return true;
}

PolicyOutput forward_actor(const TensorMap& params, const NetworkConfig& cfg,
                           const env::Observation& obs, StackTape* tape) {
    check_observation(cfg, obs);
    StackTape local;
    StackTape& t = tape ? *tape : local;
    forward_stack(params, cfg, "actor.", obs, cfg.num_actions, t);

    PolicyOutput out;
    out.logits = t.head;
    const std::size_t n = out.logits.size();
    double mx = out.logits[0];
    for (double v : out.logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : out.logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    out.log_probs.resize(n);
    out.probs.resize(n);
    out.entropy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out.log_probs[k] = out.logits[k] - lse;
        out.probs[k] = std::exp(out.log_probs[k]);
        if (out.probs[k] > 0.0) out.entropy -= out.probs[k] * out.log_probs[k];
    }
    return out;
}

double forward_critic(const TensorMap& params, const NetworkConfig& cfg,
                      const env::Observation& obs, StackTape* tape) {
    check_observation(cfg, obs);
    StackTape local;
    StackTape& t = tape ? *tape : local;
    forward_stack(params, cfg, "critic.", obs, 1, t);
    return t.head[0];
}

void backward_actor(const TensorMap& params, const NetworkConfig& cfg,
                    const StackTape& tape, const double* dlogits, TensorMap& grads) {
    backward_stack(params, cfg, "actor.", tape, dlogits, cfg.num_actions, grads);
}

void backward_critic(const TensorMap& params, const NetworkConfig& cfg,
                     const StackTape& tape, double dvalue, TensorMap& grads) {
    backward_stack(params, cfg, "critic.", tape, &dvalue, 1, grads);
}

std::pair<int, double> sample_action(const PolicyOutput& policy, Rng& rng) {
    const std::size_t idx = rng.categorical(policy.probs);
    return {static_cast<int>(idx), policy.log_probs[idx]};
}

}
