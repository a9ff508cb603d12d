#include <benchmark/benchmark.h>

#include "fxrl/a3c.hpp"
#include "fxrl/network.hpp"
#include "fxrl/rl.hpp"

using namespace fxrl;

namespace {

nn::NetworkConfig net_of(std::size_t hidden) {
    nn::NetworkConfig net;
    net.hidden = hidden;
    net.window = 16;
    return net;
}

env::Observation random_obs(const nn::NetworkConfig& net, Rng& rng) {
    env::Observation obs;
    obs.window = net.window;
    obs.feature_rows.resize(net.window * net.feature_dim);
    for (double& x : obs.feature_rows) x = rng.uniform(-0.005, 0.005);
    obs.action_history.assign(net.window * net.num_actions, 0.0);
    for (std::size_t k = 0; k < net.window; ++k)
        obs.action_history[k * net.num_actions + rng.uniform_index(net.num_actions)] =
            1.0;
    return obs;
}

rl::Segment random_segment(const nn::NetworkConfig& net, std::size_t steps, Rng& rng) {
    rl::Segment seg;
    for (std::size_t i = 0; i < steps; ++i) {
        seg.obs.push_back(random_obs(net, rng));
        seg.actions.push_back(static_cast<int>(rng.uniform_index(net.num_actions)));
        seg.rewards.push_back(rng.uniform(-0.002, 0.002));
        seg.log_probs.push_back(-1.0986122886681098);
    }
    seg.last_obs = random_obs(net, rng);
    seg.terminal = false;
    return seg;
}

} // namespace

static void BM_actor_forward(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(static_cast<std::size_t>(state.range(0)));
    Rng rng(1);
    const TensorMap params = nn::init_params(net, rng);
    const env::Observation obs = random_obs(net, rng);
    for (auto _ : state) {
        const nn::PolicyOutput out = nn::forward_actor(params, net, obs);
        benchmark::DoNotOptimize(out.probs.data());
    }
}
BENCHMARK(BM_actor_forward)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_actor_forward_backward(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(static_cast<std::size_t>(state.range(0)));
    Rng rng(2);
    const TensorMap params = nn::init_params(net, rng);
    const env::Observation obs = random_obs(net, rng);
    const double dlogits[3] = {0.2, -0.5, 0.3};
    for (auto _ : state) {
        nn::StackTape tape;
        nn::forward_actor(params, net, obs, &tape);
        TensorMap grads;
        nn::backward_actor(params, net, tape, dlogits, grads);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_actor_forward_backward)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_critic_forward(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(static_cast<std::size_t>(state.range(0)));
    Rng rng(3);
    const TensorMap params = nn::init_params(net, rng);
    const env::Observation obs = random_obs(net, rng);
    for (auto _ : state) {
        const double v = nn::forward_critic(params, net, obs);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_critic_forward)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_a3c_segment_gradients(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(static_cast<std::size_t>(state.range(0)));
    Rng rng(4);
    const TensorMap params = nn::init_params(net, rng);
    const rl::Segment seg = random_segment(net, 20, rng);
    const rl::TrainConfig cfg;
    for (auto _ : state) {
        TensorMap grads;
        rl::a3c_gradients(params, net, seg, cfg, grads);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_a3c_segment_gradients)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_store_snapshot(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(64);
    Rng rng(5);
    rl::TrainConfig cfg;
    const a3c::UpdateMode mode =
        state.range(0) == 0 ? a3c::UpdateMode::lock : a3c::UpdateMode::nolock;
    a3c::GlobalStore store(nn::init_params(net, rng), mode, cfg);
    TensorMap local;
    for (auto _ : state) {
        store.snapshot(local);
        benchmark::DoNotOptimize(local);
    }
    state.SetLabel(a3c::to_string(mode));
}
BENCHMARK(BM_store_snapshot)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_store_apply(benchmark::State& state) {
    const nn::NetworkConfig net = net_of(64);
    Rng rng(6);
    rl::TrainConfig cfg;
    const a3c::UpdateMode mode =
        state.range(0) == 0 ? a3c::UpdateMode::lock : a3c::UpdateMode::nolock;
    a3c::GlobalStore store(nn::init_params(net, rng), mode, cfg);
    TensorMap grads = nn::init_params(net, rng);
    for (auto& [name, t] : grads)
        for (double& x : t.data) x *= 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(store.apply_update(grads, 0));
    }
    state.SetLabel(a3c::to_string(mode));
}
BENCHMARK(BM_store_apply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
