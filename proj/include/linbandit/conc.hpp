#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "env.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace linbandit {

/// Anytime confidence threshold for the least-squares mean estimates:
///   f(n, delta) = 2 (1 + 1/log n) log(1/delta) + c d log(d log n).
/// c is a universal constant the analysis never pins down; it is surfaced
/// as an experiment knob (default 1).
inline double f_delta(std::int64_t n, double delta, int d, double c_univ = 1.0) {
    if (n < 3) throw std::domain_error("f_delta: n must be >= 3");
    if (d < 1) throw std::domain_error("f_delta: d must be >= 1");
    if (!(c_univ > 0.0)) throw std::domain_error("f_delta: c_univ must be positive");
    const double ln = std::log(static_cast<double>(n));
    if (!(delta >= 1.0 / static_cast<double>(n) && delta < 1.0))
        throw std::domain_error("f_delta: delta must lie in [1/n, 1)");
    return 2.0 * (1.0 + 1.0 / ln) * std::log(1.0 / delta) + c_univ * d * std::log(d * ln);
}

/// The two standard abbreviations: f_n at delta = 1/n, g_n at delta = 1/log n.
struct Thresholds {
    std::int64_t n = 0;
    int d = 0;
    double c_univ = 1.0;
    double f_n = 0.0;
    double g_n = 0.0;

    double at(double delta) const { return f_delta(n, delta, d, c_univ); }
};

inline Thresholds make_thresholds(std::int64_t n, int d, double c_univ = 1.0) {
    Thresholds t;
    t.n = n;
    t.d = d;
    t.c_univ = c_univ;
    t.f_n = f_delta(n, 1.0 / static_cast<double>(n), d, c_univ);
    t.g_n = f_delta(n, 1.0 / std::log(static_cast<double>(n)), d, c_univ);
    return t;
}

struct ViolationOptions {
    double c_univ = 1.0;
    int threads = 0;
    bool noiseless = false;
    double threshold_scale = 1.0;  // test hook: shrink the bound to check the detector
};

/// Monte Carlo estimate of the anytime deviation-bound violation rate: the
/// fraction of replications in which some arm x and round t >= t0 has
/// |mu_hat_x(t) - mu_x| >= sqrt(||x||^2_{G_t^-1} f(n, delta)). The schedule
/// cycles deterministically through schedule_cycle; t0 is the first round
/// at which G_t is numerically invertible.
inline double empirical_violation_rate(const Instance& inst, const std::vector<int>& schedule_cycle,
                                       std::int64_t n, double delta, int reps, std::uint64_t seed,
                                       const ViolationOptions& opts = {}) {
    if (reps < 1) throw std::invalid_argument("empirical_violation_rate: reps must be >= 1");
    if (schedule_cycle.empty())
        throw std::invalid_argument("empirical_violation_rate: schedule cycle is empty");
    const double threshold = f_delta(n, delta, inst.actions.d, opts.c_univ) * opts.threshold_scale;
    const int k = inst.actions.k;
    const int d = inst.actions.d;
    std::vector<int> violated(reps, 0);
    parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t r) {
        BanditEnv env(inst, n, mix_seed(seed, r));
        env.set_noiseless(opts.noiseless);
        Mat g = Mat::Zero(d, d);
        Vec s = Vec::Zero(d);
        Vec theta_hat(d);
        PsdFactor chol;
        for (std::int64_t t = 1; t <= n; ++t) {
            const int arm = schedule_cycle[static_cast<std::size_t>((t - 1) % schedule_cycle.size())];
            const Observation obs = env.pull(arm);
            gram_accumulate_inplace(g, inst.actions.arms[arm]);
            s.noalias() += obs.reward * inst.actions.arms[arm];
            chol.compute(g);
            if (!chol.ok()) continue;  // before t0
            chol.solve_into(s, theta_hat);
            for (int i = 0; i < k; ++i) {
                const double err = inst.actions.arms[i].dot(theta_hat) - env.gaps().means[i];
                const double width2 = chol.quad_form_inv(inst.actions.arms[i]);
                if (err * err >= width2 * threshold) {
                    violated[r] = 1;
                    return;
                }
            }
        }
    });
    std::int64_t total = 0;
    for (int v : violated) total += v;
    return static_cast<double>(total) / static_cast<double>(reps);
}

}  // namespace linbandit
