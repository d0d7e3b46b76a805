#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "conc.hpp"
#include "design.hpp"
#include "env.hpp"
#include "instances.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace linbandit {

// ---------------------------------------------------------------------------
// Online least-squares estimator

/// Running Gram matrix, response sum and derived estimates. Estimates are
/// flagged invalid until the Gram matrix becomes numerically invertible.
struct EstimatorState {
    const ActionSet* actions = nullptr;
    Mat G;
    Vec s;
    Vec theta_hat;
    Vec mu_hat;
    Vec gaps_hat;
    std::vector<std::int64_t> pulls;
    std::int64_t t = 0;
    bool valid = false;
    PsdFactor chol;

    explicit EstimatorState(const ActionSet& a)
        : actions(&a),
          G(Mat::Zero(a.d, a.d)),
          s(Vec::Zero(a.d)),
          theta_hat(Vec::Zero(a.d)),
          mu_hat(Vec::Zero(a.k)),
          gaps_hat(Vec::Zero(a.k)),
          pulls(a.k, 0) {}

    void update(int arm, double reward) {
        const Vec& x = actions->arms[arm];
        G.noalias() += x * x.transpose();
        s.noalias() += reward * x;
        ++pulls[arm];
        ++t;
        refresh();
    }

    void refresh() {
        chol.compute(G);
        valid = chol.ok();
        if (!valid) return;
        chol.solve_into(s, theta_hat);
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < actions->k; ++i) {
            mu_hat[i] = actions->arms[i].dot(theta_hat);
            best = std::max(best, mu_hat[i]);
        }
        for (int i = 0; i < actions->k; ++i) gaps_hat[i] = best - mu_hat[i];
    }

    /// ||x_arm||^2_{G^-1}; only meaningful while valid.
    double width2(int arm) { return chol.quad_form_inv(actions->arms[arm]); }
};

// ---------------------------------------------------------------------------
// Policy interface

class Policy {
public:
    virtual ~Policy() = default;
    virtual int choose() = 0;
    virtual void update(int arm, double reward) = 0;
    virtual const std::string& name() const = 0;
};

/// Structure-free UCB over per-arm sample means: after one pass through the
/// arms, play argmax mean + sqrt(2 log t / T_x).
class UcbPolicy : public Policy {
public:
    explicit UcbPolicy(int k, std::string name = "ucb") : k_(k), name_(std::move(name)) {
        counts_.assign(k, 0);
        means_.assign(k, 0.0);
    }

    int choose() override {
        const std::int64_t t = t_ + 1;
        if (t <= k_) return static_cast<int>(t - 1);
        const double logt = std::log(static_cast<double>(t));
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k_; ++i) {
            const double score = means_[i] + std::sqrt(2.0 * logt / counts_[i]);
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        return best;
    }

    void update(int arm, double reward) override {
        ++t_;
        ++counts_[arm];
        means_[arm] += (reward - means_[arm]) / counts_[arm];
    }

    const std::string& name() const override { return name_; }

private:
    int k_;
    std::string name_;
    std::int64_t t_ = 0;
    std::vector<std::int64_t> counts_;
    std::vector<double> means_;
};

/// Configuration shared by the ellipsoid-optimistic and posterior-sampling
/// policies: the scale of ||theta_hat - theta~||^2_{G_t} <= alpha_conf log n.
struct OptimisticConfig {
    double alpha_conf = 1.0;
};

/// Optimism over the ellipsoid around the least-squares estimate, evaluated
/// in closed form: argmax <x, theta_hat> + sqrt(alpha log n) ||x||_{G^-1}.
/// Round-robin warm start until the Gram matrix is invertible.
class OptimismPolicy : public Policy {
public:
    OptimismPolicy(const ActionSet& actions, OptimisticConfig cfg, std::int64_t n,
                   std::string name = "oful")
        : est_(actions),
          k_(actions.k),
          bonus_scale_(std::sqrt(cfg.alpha_conf * std::log(static_cast<double>(n)))),
          name_(std::move(name)) {}

    int choose() override {
        if (!est_.valid) return static_cast<int>(est_.t % k_);
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k_; ++i) {
            const double score = est_.mu_hat[i] + bonus_scale_ * std::sqrt(est_.width2(i));
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        return best;
    }

    void update(int arm, double reward) override { est_.update(arm, reward); }

    const std::string& name() const override { return name_; }
    const EstimatorState& estimator() const { return est_; }

private:
    EstimatorState est_;
    int k_;
    double bonus_scale_;
    std::string name_;
};

/// Linear Thompson sampling with a flat Gaussian prior: draw
/// theta_t ~ N(theta_hat, alpha G_t^-1) through the Cholesky factor and
/// play the argmax arm. Same warm start as the optimistic policy.
class ThompsonPolicy : public Policy {
public:
    ThompsonPolicy(const ActionSet& actions, OptimisticConfig cfg, std::uint64_t seed,
                   std::string name = "lints")
        : est_(actions),
          k_(actions.k),
          scale_(std::sqrt(cfg.alpha_conf)),
          rng_(seed),
          z_(actions.d),
          sample_(actions.d),
          name_(std::move(name)) {}

    int choose() override {
        if (!est_.valid) return static_cast<int>(est_.t % k_);
        for (int c = 0; c < z_.size(); ++c) z_[c] = rng_.normal();
        est_.chol.whiten_transpose_inplace(z_);
        sample_ = est_.theta_hat + scale_ * z_;
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k_; ++i) {
            const double score = est_.actions->arms[i].dot(sample_);
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        return best;
    }

    void update(int arm, double reward) override { est_.update(arm, reward); }

    const std::string& name() const override { return name_; }
    const EstimatorState& estimator() const { return est_; }

private:
    EstimatorState est_;
    int k_;
    double scale_;
    GaussianRng rng_;
    Vec z_;
    Vec sample_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Three-phase strategy: spanner warm-up, quota-driven success phase with an
// anomaly test, UCB recovery after discarding data.

enum class Phase { kWarmup, kSuccess, kRecovery };

class OptimalAlgPolicy : public Policy {
public:
    OptimalAlgPolicy(const ActionSet& actions, std::int64_t n, double c_univ = 1.0,
                     std::string name = "optimal")
        : est_(actions), actions_(&actions), n_(n), name_(std::move(name)) {
        if (n < 3) throw std::invalid_argument("optimal policy requires n >= 3");
        thresholds_ = make_thresholds(n, actions.d, c_univ);
        spanner_ = barycentric_spanner(actions, 1.0);
        warmup_per_arm_ = static_cast<std::int64_t>(
            std::ceil(std::sqrt(std::log(static_cast<double>(n)))));
        warmup_total_ = warmup_per_arm_ * actions.d;
        quotas_.assign(actions.k, 0);
        quota_is_finite_.assign(actions.k, false);
    }

    int choose() override {
        switch (phase_) {
            case Phase::kWarmup:
                return spanner_.indices[static_cast<std::size_t>(est_.t % actions_->d)];
            case Phase::kSuccess: {
                int best = -1;
                std::int64_t best_deficit = 0;
                for (int i = 0; i < actions_->k; ++i) {
                    if (!quota_is_finite_[i]) continue;
                    const std::int64_t deficit = quotas_[i] - est_.pulls[i];
                    if (deficit > best_deficit) {
                        best_deficit = deficit;
                        best = i;
                    }
                }
                return best >= 0 ? best : best_arm_;
            }
            case Phase::kRecovery: {
                for (int i = 0; i < actions_->k; ++i)
                    if (recovery_counts_[i] == 0) return i;
                const double logt = std::log(static_cast<double>(est_.t + 1));
                int best = 0;
                double best_score = -std::numeric_limits<double>::infinity();
                for (int i = 0; i < actions_->k; ++i) {
                    const double score =
                        recovery_means_[i] + std::sqrt(2.0 * logt / recovery_counts_[i]);
                    if (score > best_score) {
                        best_score = score;
                        best = i;
                    }
                }
                return best;
            }
        }
        return 0;
    }

    void update(int arm, double reward) override {
        est_.update(arm, reward);
        switch (phase_) {
            case Phase::kWarmup:
                if (est_.t >= warmup_total_) begin_success();
                break;
            case Phase::kSuccess:
                if ((est_.mu_hat - mu_snapshot_).cwiseAbs().maxCoeff() > 2.0 * eps_n_)
                    begin_recovery();
                break;
            case Phase::kRecovery: {
                ++recovery_counts_[arm];
                recovery_means_[arm] += (reward - recovery_means_[arm]) / recovery_counts_[arm];
                break;
            }
        }
    }

    const std::string& name() const override { return name_; }

    Phase phase() const { return phase_; }
    double eps_n() const { return eps_n_; }
    std::int64_t warmup_rounds() const { return warmup_total_; }
    std::int64_t warmup_per_arm() const { return warmup_per_arm_; }
    const Spanner& spanner() const { return spanner_; }
    const std::vector<std::int64_t>& quotas() const { return quotas_; }
    const std::vector<bool>& quota_is_finite() const { return quota_is_finite_; }
    const EstimatorState& estimator() const { return est_; }
    const Thresholds& thresholds() const { return thresholds_; }

private:
    void begin_success() {
        if (!est_.valid) {  // spanner pulls should guarantee rank d
            begin_recovery();
            return;
        }
        double w = 0.0;
        for (int i = 0; i < actions_->k; ++i) w = std::max(w, est_.width2(i));
        eps_n_ = std::sqrt(w) * std::sqrt(thresholds_.g_n);
        mu_snapshot_ = est_.mu_hat;
        PullPlan plan = pull_plan(est_.gaps_hat, *actions_, n_, thresholds_.f_n);
        for (int i = 0; i < actions_->k; ++i) {
            if (plan.unbounded[i]) {
                best_arm_ = i;
            } else {
                quota_is_finite_[i] = true;
                quotas_[i] = static_cast<std::int64_t>(std::ceil(plan.counts[i]));
            }
        }
        phase_ = Phase::kSuccess;
    }

    void begin_recovery() {
        phase_ = Phase::kRecovery;
        recovery_counts_.assign(actions_->k, 0);
        recovery_means_.assign(actions_->k, 0.0);
    }

    EstimatorState est_;
    const ActionSet* actions_;
    std::int64_t n_;
    Thresholds thresholds_;
    Spanner spanner_;
    std::int64_t warmup_per_arm_ = 0;
    std::int64_t warmup_total_ = 0;
    Phase phase_ = Phase::kWarmup;
    double eps_n_ = 0.0;
    Vec mu_snapshot_;
    int best_arm_ = 0;
    std::vector<std::int64_t> quotas_;
    std::vector<bool> quota_is_finite_;
    std::vector<std::int64_t> recovery_counts_;
    std::vector<double> recovery_means_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Policy factory and the choose/update loop

struct PolicyConfig {
    std::string name;          // "ucb" | "oful" | "lints" | "optimal"
    double alpha_conf = 1.0;   // oful / lints
    double c_univ = 1.0;       // optimal
};

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const ActionSet& actions,
                                           std::int64_t n, std::uint64_t seed) {
    if (cfg.name == "ucb") return std::make_unique<UcbPolicy>(actions.k);
    if (cfg.name == "oful")
        return std::make_unique<OptimismPolicy>(actions, OptimisticConfig{cfg.alpha_conf}, n);
    if (cfg.name == "lints")
        return std::make_unique<ThompsonPolicy>(actions, OptimisticConfig{cfg.alpha_conf}, seed);
    if (cfg.name == "optimal")
        return std::make_unique<OptimalAlgPolicy>(actions, n, cfg.c_univ);
    throw ConfigError("unknown policy name '" + cfg.name + "'");
}

struct TracePoint {
    std::int64_t t = 0;
    int arm = 0;
    double instant_regret = 0.0;
    double cum_regret = 0.0;
};

/// Per-replication record: checkpointed rounds (geometric grid plus the
/// horizon, or every round when full), final regret and pull counts.
struct RegretTrace {
    int rep_id = 0;
    std::string policy;
    std::int64_t horizon = 0;
    std::vector<TracePoint> points;
    double final_cum_regret = 0.0;
    std::vector<std::int64_t> final_pulls;
};

inline RegretTrace policy_run(Policy& policy, BanditEnv& env, bool full_trace = false) {
    RegretTrace trace;
    trace.policy = policy.name();
    trace.horizon = env.horizon();
    double cum = 0.0;
    std::int64_t next_checkpoint = 1;
    const std::int64_t n = env.horizon();
    for (std::int64_t t = 1; t <= n; ++t) {
        const int arm = policy.choose();
        const Observation obs = env.pull(arm);
        policy.update(arm, obs.reward);
        cum += obs.instant_regret;
        if (full_trace || t == next_checkpoint || t == n) {
            trace.points.push_back(TracePoint{t, arm, obs.instant_regret, cum});
            if (t == next_checkpoint) next_checkpoint *= 2;
        }
    }
    trace.final_cum_regret = cum;
    trace.final_pulls = env.pull_counts();
    return trace;
}

}  // namespace linbandit
