#include "fxrl/rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fxrl::rl {

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double bootstrap, double gamma) {
    std::vector<double> out(rewards.size());
    double acc = bootstrap;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        out[i] = acc;
    }
    return out;
}

std::vector<double> advantages(std::span<const double> returns,
                               std::span<const double> values) {
    std::vector<double> out(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) out[i] = returns[i] - values[i];
    return out;
}

double a3c_policy_loss(std::span<const double> log_probs,
                       std::span<const double> advs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < log_probs.size(); ++i) acc += log_probs[i] * advs[i];
    return -acc / static_cast<double>(log_probs.size());
}

double a3c_value_loss(std::span<const double> returns,
                      std::span<const double> values) {
    double acc = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        const double d = returns[i] - values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(returns.size());
}

double ppo_loss(std::span<const double> new_log_probs,
                std::span<const double> old_log_probs,
                std::span<const double> advs,
                std::span<const double> entropies,
                double clip_epsilon, double entropy_coef) {
    const std::size_t n = new_log_probs.size();
    double obj = 0.0, ent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = std::exp(new_log_probs[i] - old_log_probs[i]);
        const double clipped =
            std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        obj += std::min(ratio * advs[i], clipped * advs[i]);
        ent += entropies[i];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    return -obj * inv_n - entropy_coef * ent * inv_n;
}

void policy_loss_logit_grad(const nn::PolicyOutput& policy, int action,
                            double advantage, double entropy_coef, double inv_n,
                            double* out) {
    const std::size_t n = policy.probs.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double indicator = j == static_cast<std::size_t>(action) ? 1.0 : 0.0;
        const double d_policy = -advantage * (indicator - policy.probs[j]);
        const double d_entropy =
            entropy_coef * policy.probs[j] * (policy.log_probs[j] + policy.entropy);
        out[j] = inv_n * (d_policy + d_entropy);
    }
}

void ppo_loss_logit_grad(const nn::PolicyOutput& policy, int action,
                         double old_log_prob, double advantage,
                         double clip_epsilon, double entropy_coef, double inv_n,
                         double* out) {
    const std::size_t n = policy.probs.size();
    const double new_lp = policy.log_probs[static_cast<std::size_t>(action)];
    const double ratio = std::exp(new_lp - old_log_prob);
    const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    const double unclipped_obj = ratio * advantage;
    const double clipped_obj = clipped * advantage;
    // min() passes gradient to the unclipped branch on ties; the clipped
    // branch is flat in ratio whenever it actually binds.
    const double dobj_dratio = unclipped_obj <= clipped_obj ? advantage : 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double indicator = j == static_cast<std::size_t>(action) ? 1.0 : 0.0;
        const double d_surr = -dobj_dratio * ratio * (indicator - policy.probs[j]);
        const double d_entropy =
            entropy_coef * policy.probs[j] * (policy.log_probs[j] + policy.entropy);
        out[j] = inv_n * (d_surr + d_entropy);
    }
}

double global_norm(const TensorMap& grads) {
    double acc = 0.0;
    for (const auto& [name, g] : grads)
        for (double x : g.data) acc += x * x;
    return std::sqrt(acc);
}

double clip_global_norm(TensorMap& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, g] : grads)
            for (double& x : g.data) x *= scale;
    }
    return norm;
}

AdamState make_adam_state(const TensorMap& params) {
    AdamState state;
    for (const auto& [name, p] : params) {
        state.m.emplace(name, Tensor::zeros(p.shape));
        state.v.emplace(name, Tensor::zeros(p.shape));
    }
    return state;
}

void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, double lr) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double g = git == grads.end() ? 0.0 : git->second.data[i];
            const double mi = kAdamBeta1 * m.data[i] + (1.0 - kAdamBeta1) * g;
            const double vi = kAdamBeta2 * v.data[i] + (1.0 - kAdamBeta2) * g * g;
            m.data[i] = mi;
            v.data[i] = vi;
            p.data[i] -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + kAdamEps);
        }
    }
}

double Segment::reward_sum() const {
    double acc = 0.0;
    for (double r : rewards) acc += r;
    return acc;
}

Segment collect_segment(env::TradingEnv& env, const TensorMap& params,
                        const nn::NetworkConfig& net, Rng& rng,
                        std::size_t max_steps, bool with_values) {
    Segment seg;
    seg.descriptor = env.descriptor();
    env::Observation obs = env.observation();
    for (std::size_t k = 0; k < max_steps && !env.done(); ++k) {
        const nn::PolicyOutput policy = forward_actor(params, net, obs);
        auto [action, log_prob] = sample_action(policy, rng);
        if (with_values) seg.values.push_back(forward_critic(params, net, obs));
        env::StepResult sr = env.step(static_cast<env::Action>(action));
        seg.obs.push_back(std::move(obs));
        seg.actions.push_back(action);
        seg.rewards.push_back(sr.reward);
        seg.log_probs.push_back(log_prob);
        obs = std::move(sr.observation);
    }
    seg.last_obs = std::move(obs);
    seg.terminal = env.done();
    return seg;
}

LossStats a3c_gradients(const TensorMap& params, const nn::NetworkConfig& net,
                        const Segment& seg, const TrainConfig& cfg, TensorMap& grads) {
    const std::size_t n = seg.size();
    const double bootstrap =
        seg.terminal ? 0.0 : forward_critic(params, net, seg.last_obs);
    const std::vector<double> returns =
        discounted_returns(seg.rewards, bootstrap, cfg.gamma);
    const double inv_n = 1.0 / static_cast<double>(n);

    LossStats stats;
    std::vector<double> seed(net.num_actions);
    nn::StackTape actor_tape, critic_tape;
    for (std::size_t i = 0; i < n; ++i) {
        const nn::PolicyOutput policy =
            forward_actor(params, net, seg.obs[i], &actor_tape);
        const double value = forward_critic(params, net, seg.obs[i], &critic_tape);
        const double adv = returns[i] - value;

        policy_loss_logit_grad(policy, seg.actions[i], adv, cfg.entropy_coef,
                               inv_n, seed.data());
        backward_actor(params, net, actor_tape, seed.data(), grads);

        const double dvalue =
            cfg.value_loss_coef * inv_n * (-2.0) * (returns[i] - value);
        backward_critic(params, net, critic_tape, dvalue, grads);

        stats.policy_loss -=
            policy.log_probs[static_cast<std::size_t>(seg.actions[i])] * adv * inv_n;
        stats.value_loss += (returns[i] - value) * (returns[i] - value) * inv_n;
        stats.entropy += policy.entropy * inv_n;
    }
    return stats;
}

LossStats ppo_gradients(const TensorMap& params, const nn::NetworkConfig& net,
                        const Segment& rollout, std::span<const double> returns,
                        std::span<const double> advs, const TrainConfig& cfg,
                        TensorMap& grads) {
    const std::size_t n = rollout.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    LossStats stats;
    std::vector<double> seed(net.num_actions);
    nn::StackTape actor_tape, critic_tape;
    for (std::size_t i = 0; i < n; ++i) {
        const nn::PolicyOutput policy =
            forward_actor(params, net, rollout.obs[i], &actor_tape);
        ppo_loss_logit_grad(policy, rollout.actions[i], rollout.log_probs[i],
                            advs[i], cfg.clip_epsilon, cfg.entropy_coef, inv_n,
                            seed.data());
        backward_actor(params, net, actor_tape, seed.data(), grads);

        const double value = forward_critic(params, net, rollout.obs[i], &critic_tape);
        const double dvalue =
            cfg.value_loss_coef * inv_n * (-2.0) * (returns[i] - value);
        backward_critic(params, net, critic_tape, dvalue, grads);

        const double new_lp =
            policy.log_probs[static_cast<std::size_t>(rollout.actions[i])];
        const double ratio = std::exp(new_lp - rollout.log_probs[i]);
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        stats.policy_loss -= std::min(ratio * advs[i], clipped * advs[i]) * inv_n;
        stats.value_loss += (returns[i] - value) * (returns[i] - value) * inv_n;
        stats.entropy += policy.entropy * inv_n;
    }
    return stats;
}

PpoResult run_ppo(const data::DatasetRegistry& registry, const env::EnvConfig& envcfg,
                  const nn::NetworkConfig& net, const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    PpoResult result;
    result.params = nn::init_params(net, rng);
    AdamState adam = make_adam_state(result.params);
    env::TradingEnv env(registry, envcfg);

    std::size_t episode = 0;
    while (result.env_steps < cfg.total_steps) {
        const auto t0 = std::chrono::steady_clock::now();
        env.reset(rng);
        Segment rollout;
        try {
            rollout =
                collect_segment(env, result.params, net, rng, envcfg.episode_len, true);
        } catch (const nn::NumericError& e) {
            throw TrainAbort(std::string(e.what()) + " at episode " +
                                 std::to_string(episode),
                             result.params);
        }
        const std::vector<double> returns =
            discounted_returns(rollout.rewards, 0.0, cfg.gamma);
        const std::vector<double> advs = advantages(returns, rollout.values);

        for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
            TensorMap grads;
            LossStats stats;
            try {
                stats = ppo_gradients(result.params, net, rollout, returns, advs, cfg,
                                      grads);
            } catch (const nn::NumericError& e) {
                throw TrainAbort(std::string(e.what()) + " at episode " +
                                     std::to_string(episode),
                                 result.params);
            }
            if (!std::isfinite(stats.policy_loss) || !std::isfinite(stats.value_loss) ||
                !nn::all_finite(grads))
                throw TrainAbort("non-finite loss or gradients at episode " +
                                     std::to_string(episode),
                                 result.params);
            clip_global_norm(grads, cfg.grad_clip);
            adam_step(result.params, grads, adam, cfg.learning_rate);
        }
        if (!nn::all_finite(result.params))
            throw TrainAbort("non-finite parameters after episode " +
                                 std::to_string(episode),
                             result.params);

        result.env_steps += rollout.size();
        const auto t1 = std::chrono::steady_clock::now();
        EpisodeRecord rec;
        rec.episode = episode++;
        rec.pair = rollout.descriptor.pair;
        rec.start = rollout.descriptor.start;
        rec.seed = cfg.seed;
        rec.steps = rollout.size();
        rec.reward_sum = rollout.reward_sum();
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.log.push_back(std::move(rec));
    }
    return result;
}

}
