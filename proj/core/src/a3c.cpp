#include "fxrl/a3c.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <thread>

namespace fxrl::a3c {

const char* to_string(UpdateMode m) {
    return m == UpdateMode::lock ? "lock" : "nolock";
}

double TearProbe::pattern_for(unsigned tag) {
    const std::uint64_t byte = 0xA0ull + (tag & 0x0Full);
    return std::bit_cast<double>(byte * 0x0101010101010101ull);
}

bool TearProbe::legal_bits(std::uint64_t bits) {
    if (bits == 0) return true;
    return bits == (bits & 0xFFull) * 0x0101010101010101ull;
}

void TearProbe::hammer(unsigned tag) {
    const double mine = pattern_for(tag);
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const std::uint64_t seen = std::bit_cast<std::uint64_t>(slots_.load(i));
        if (!legal_bits(seen)) tears_.fetch_add(1, std::memory_order_relaxed);
        slots_.store(i, mine);
    }
}

GlobalStore::GlobalStore(const TensorMap& init, UpdateMode mode,
                         const rl::TrainConfig& cfg)
    : cfg_(cfg), mode_(mode) {
    for (const auto& [name, tensor] : init) {
        names_.push_back(name);
        shapes_.push_back(tensor.shape);
        params_.emplace_back(tensor.numel());
        m_.emplace_back(tensor.numel());
        v_.emplace_back(tensor.numel());
        AtomicVec& p = params_.back();
        for (std::size_t i = 0; i < tensor.numel(); ++i) p.store(i, tensor.data[i]);
    }
}

void GlobalStore::snapshot_unlocked(TensorMap& out) const {
    for (std::size_t k = 0; k < names_.size(); ++k) {
        Tensor& t = out[names_[k]];
        if (t.shape != shapes_[k]) {
            t.shape = shapes_[k];
            t.data.resize(params_[k].size());
        }
        for (std::size_t i = 0; i < params_[k].size(); ++i) t.data[i] = params_[k].load(i);
    }
}

void GlobalStore::snapshot(TensorMap& out) const {
    if (mode_ == UpdateMode::lock) {
        std::lock_guard<std::mutex> guard(mutex_);
        snapshot_unlocked(out);
    } else {
        snapshot_unlocked(out);
    }
}

TensorMap GlobalStore::snapshot() const {
    TensorMap out;
    snapshot(out);
    return out;
}

std::uint64_t GlobalStore::apply_unlocked(const TensorMap& grads, unsigned worker_tag) {
    probe_.hammer(worker_tag);
    if (in_update_.exchange(true, std::memory_order_acq_rel))
        overlaps_.fetch_add(1, std::memory_order_relaxed);

    const std::uint64_t t = updates_.fetch_add(1, std::memory_order_relaxed) + 1;
    const double bc1 = 1.0 - std::pow(rl::kAdamBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(rl::kAdamBeta2, static_cast<double>(t));
    const double lr = cfg_.learning_rate;

    for (std::size_t k = 0; k < names_.size(); ++k) {
        auto git = grads.find(names_[k]);
        AtomicVec& p = params_[k];
        AtomicVec& m = m_[k];
        AtomicVec& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = git == grads.end() ? 0.0 : git->second.data[i];
            const double mi = rl::kAdamBeta1 * m.load(i) + (1.0 - rl::kAdamBeta1) * g;
            const double vi = rl::kAdamBeta2 * v.load(i) + (1.0 - rl::kAdamBeta2) * g * g;
            m.store(i, mi);
            v.store(i, vi);
            p.store(i, p.load(i) - lr * (mi / bc1) / (std::sqrt(vi / bc2) + rl::kAdamEps));
        }
    }

    in_update_.store(false, std::memory_order_release);
    if (on_update_) {
        TensorMap snap;
        snapshot_unlocked(snap);
        on_update_(t, snap);
    }
    return t;
}

std::uint64_t GlobalStore::apply_update(const TensorMap& grads, unsigned worker_tag) {
    if (mode_ == UpdateMode::lock) {
        std::lock_guard<std::mutex> guard(mutex_);
        return apply_unlocked(grads, worker_tag);
    }
    return apply_unlocked(grads, worker_tag);
}

namespace {

struct SharedRunState {
    std::atomic<bool> abort{false};
    std::mutex error_mutex;
    std::string error;

    void fail(const std::string& msg) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (error.empty()) error = msg;
        abort.store(true);
    }
};

void worker_loop(unsigned worker_id, GlobalStore& store,
                 const data::DatasetRegistry& registry, const env::EnvConfig& envcfg,
                 const nn::NetworkConfig& net, const rl::TrainConfig& cfg,
                 SharedRunState& shared, std::vector<UpdateRecord>& log) {
    try {
        const std::uint64_t worker_seed = cfg.seed + worker_id;
        Rng rng(worker_seed);
        env::TradingEnv env(registry, envcfg);
        TensorMap local;
        bool need_reset = true;

        while (!store.budget_exhausted() && !shared.abort.load(std::memory_order_relaxed)) {
            const auto t0 = std::chrono::steady_clock::now();
            store.snapshot(local);
            if (need_reset || env.done()) {
                env.reset(rng);
                need_reset = false;
            }

            rl::Segment seg = rl::collect_segment(env, local, net, rng, cfg.n_steps, false);
            TensorMap grads;
            rl::a3c_gradients(local, net, seg, cfg, grads);

            UpdateRecord rec;
            rec.worker = worker_id;
            rec.seed = worker_seed;
            rec.pair = seg.descriptor.pair;
            rec.start = seg.descriptor.start;
            rec.steps = seg.size();
            rec.segment_reward = seg.reward_sum();

            if (!nn::all_finite(grads)) {
                // drop the poisoned update and resync on the next pass
                rec.skipped = true;
                need_reset = true;
            } else {
                rec.grad_norm = rl::clip_global_norm(grads, cfg.grad_clip);
                rec.update = store.apply_update(grads, worker_id);
            }
            const auto t1 = std::chrono::steady_clock::now();
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            log.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        shared.fail("worker " + std::to_string(worker_id) + ": " + e.what());
    }
}

} // namespace

A3cResult run_a3c(const data::DatasetRegistry& registry, const env::EnvConfig& envcfg,
                  const nn::NetworkConfig& net, const rl::TrainConfig& cfg,
                  UpdateMode mode, const A3cOptions& options) {
    if (cfg.workers == 0) throw std::invalid_argument("run_a3c: workers must be positive");

    Rng init_rng(cfg.seed);
    GlobalStore store(nn::init_params(net, init_rng), mode, cfg);
    if (options.on_update) store.set_update_hook(options.on_update);

    SharedRunState shared;
    std::vector<std::vector<UpdateRecord>> worker_logs(cfg.workers);
    std::vector<std::thread> threads;
    threads.reserve(cfg.workers);
    for (unsigned w = 0; w < cfg.workers; ++w)
        threads.emplace_back(worker_loop, w, std::ref(store), std::cref(registry),
                             std::cref(envcfg), std::cref(net), std::cref(cfg),
                             std::ref(shared), std::ref(worker_logs[w]));
    for (std::thread& t : threads) t.join();

    if (shared.abort.load())
        throw rl::TrainAbort("a3c run aborted: " + shared.error, store.snapshot());

    A3cResult result;
    result.params = store.snapshot();
    result.updates = store.updates_applied();
    result.overlap_count = store.overlap_count();
    result.tear_count = store.tear_count();
    result.worker_updates.assign(cfg.workers, 0);
    for (unsigned w = 0; w < cfg.workers; ++w) {
        for (UpdateRecord& rec : worker_logs[w]) {
            if (!rec.skipped) ++result.worker_updates[w];
            result.log.push_back(std::move(rec));
        }
    }
    std::sort(result.log.begin(), result.log.end(),
              [](const UpdateRecord& a, const UpdateRecord& b) {
                  if (a.update != b.update) return a.update < b.update;
                  return a.worker < b.worker;
              });
    return result;
}

}
