#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fxrl/rl.hpp"

namespace fxrl::a3c {

// lock:   every global update runs under one mutex, serialized.
// nolock: updates run concurrently; every element access is still atomic
//         at the 8-byte level, so races interleave but never tear.
enum class UpdateMode { lock, nolock };

const char* to_string(UpdateMode m);

// Flat buffer of atomic doubles with relaxed element access.
class AtomicVec {
public:
    explicit AtomicVec(std::size_t n)
        : size_(n), v_(std::make_unique<std::atomic<double>[]>(n)) {
        for (std::size_t i = 0; i < n; ++i) v_[i].store(0.0, std::memory_order_relaxed);
    }

    std::size_t size() const { return size_; }
    double load(std::size_t i) const { return v_[i].load(std::memory_order_relaxed); }
    void store(std::size_t i, double x) { v_[i].store(x, std::memory_order_relaxed); }

private:
    std::size_t size_;
    std::unique_ptr<std::atomic<double>[]> v_;
};

// Torn-access detector. Writers stamp slots with worker-tagged bit patterns
// (all 8 bytes equal) through the same atomic element type the parameter
// buffers use; every read back must be one of the legal stamps. A torn
// 8-byte access would mix bytes from two stamps and get counted.
class TearProbe {
public:
    explicit TearProbe(std::size_t slots = 64) : slots_(slots) {}

    static double pattern_for(unsigned tag);
    static bool legal_bits(std::uint64_t bits);

    void hammer(unsigned tag);
    std::uint64_t tears() const { return tears_.load(std::memory_order_relaxed); }

private:
    AtomicVec slots_;
    std::atomic<std::uint64_t> tears_{0};
};

// Globally shared parameters plus shared first/second Adam moments and a
// shared update counter, the coordination point of every worker.
class GlobalStore {
public:
    GlobalStore(const TensorMap& init, UpdateMode mode, const rl::TrainConfig& cfg);

    UpdateMode mode() const { return mode_; }

    // Copies current global parameters into out (allocating on first use).
    // Serialized against updates in lock mode.
    void snapshot(TensorMap& out) const;
    TensorMap snapshot() const;

    // Folds clipped gradients into the shared Adam state and parameters.
    // Returns the 1-based global update index.
    std::uint64_t apply_update(const TensorMap& grads, unsigned worker_tag);

    std::uint64_t updates_applied() const {
        return updates_.load(std::memory_order_relaxed);
    }
    // Budget accounting is in units of updates * n_steps.
    bool budget_exhausted() const {
        return updates_applied() * cfg_.n_steps >= cfg_.total_steps;
    }

    // Instrumentation: overlapping update sections observed (always 0 in
    // lock mode) and torn-element detections (must always be 0).
    std::uint64_t overlap_count() const {
        return overlaps_.load(std::memory_order_relaxed);
    }
    std::uint64_t tear_count() const { return probe_.tears(); }

    // Diagnostic hook, called after each applied update with a fresh
    // snapshot; runs inside the critical section in lock mode.
    void set_update_hook(std::function<void(std::uint64_t, const TensorMap&)> hook) {
        on_update_ = std::move(hook);
    }

private:
    void snapshot_unlocked(TensorMap& out) const;
    std::uint64_t apply_unlocked(const TensorMap& grads, unsigned worker_tag);

    std::vector<std::string> names_;
    std::vector<std::vector<std::size_t>> shapes_;
    std::vector<AtomicVec> params_, m_, v_;
    rl::TrainConfig cfg_;
    UpdateMode mode_;
    std::atomic<std::uint64_t> updates_{0};
    mutable std::mutex mutex_;
    std::atomic<bool> in_update_{false};
    std::atomic<std::uint64_t> overlaps_{0};
    TearProbe probe_;
    std::function<void(std::uint64_t, const TensorMap&)> on_update_;
};

struct UpdateRecord {
    unsigned worker = 0;
    std::uint64_t update = 0; // global index, 0 when the update was skipped
    std::string pair;
    std::size_t start = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    double segment_reward = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
    bool skipped = false; // non-finite gradients dropped, worker resynced
};

struct A3cOptions {
    std::function<void(std::uint64_t, const TensorMap&)> on_update;
};

struct A3cResult {
    TensorMap params;
    std::vector<UpdateRecord> log; // merged across workers, by update index
    std::uint64_t updates = 0;
    std::uint64_t overlap_count = 0;
    std::uint64_t tear_count = 0;
    std::vector<std::uint64_t> worker_updates;
};

// Spawns cfg.workers threads, each with rng seed cfg.seed + worker_id,
// against one GlobalStore initialized from nn::init_params(net, Rng(seed)).
// Workers loop: sync local copy, collect up to n_steps, compute gradients,
// clip, apply; episodes continue across segments and reset when done.
// Stops once applied updates cover total_steps.
A3cResult run_a3c(const data::DatasetRegistry& registry, const env::EnvConfig& envcfg,
                  const nn::NetworkConfig& net, const rl::TrainConfig& cfg,
                  UpdateMode mode, const A3cOptions& options = {});

}
