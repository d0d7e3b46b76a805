#pragma once

#include <cstdint>
#include <vector>

#include "instances.hpp"
#include "rng.hpp"

namespace linbandit {

/// One interaction step. instant_regret is bookkeeping for the harness;
/// policies must only ever see (arm_index, reward).
struct Observation {
    int arm_index = 0;
    double reward = 0.0;
    double instant_regret = 0.0;
};

/// Simulates the linear bandit: pulls return <x, theta> plus standard
/// Gaussian noise from a deterministic stream. One instance per
/// replication; never shared across threads.
class BanditEnv {
public:
    BanditEnv(Instance inst, std::int64_t horizon, std::uint64_t seed)
        : inst_(std::move(inst)),
          gaps_(compute_gaps(inst_)),
          horizon_(horizon),
          rng_(seed),
          pull_counts_(inst_.actions.k, 0) {
        if (horizon_ < 0) throw std::invalid_argument("horizon must be nonnegative");
    }

    Observation pull(int arm_index) {
        if (t_ >= horizon_) throw HorizonExceededError("pull past the configured horizon");
        if (arm_index < 0 || arm_index >= inst_.actions.k)
            throw BadArmIndexError("arm index out of range");
        const double noise = noiseless_ ? 0.0 : rng_.normal();
        Observation obs;
        obs.arm_index = arm_index;
        obs.reward = gaps_.means[arm_index] + noise;
        obs.instant_regret = gaps_.gaps[arm_index];
        ++t_;
        ++pull_counts_[arm_index];
        if (obs.instant_regret == 0.0) ++optimal_pulls_;
        return obs;
    }

    /// Test hook: replace the noise stream with zeros.
    void set_noiseless(bool on) { noiseless_ = on; }

    std::int64_t t() const { return t_; }
    std::int64_t horizon() const { return horizon_; }
    const std::vector<std::int64_t>& pull_counts() const { return pull_counts_; }
    std::int64_t optimal_pulls() const { return optimal_pulls_; }
    const Instance& instance() const { return inst_; }
    const GapInfo& gaps() const { return gaps_; }  // harness-only accounting

private:
    Instance inst_;
    GapInfo gaps_;
    std::int64_t horizon_;
    GaussianRng rng_;
    std::vector<std::int64_t> pull_counts_;
    std::int64_t optimal_pulls_ = 0;
    std::int64_t t_ = 0;
    bool noiseless_ = false;
};

}  // namespace linbandit
