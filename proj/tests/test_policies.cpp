#include <catch2/catch_amalgamated.hpp>

#include "linbandit/policies.hpp"

using namespace linbandit;
using Catch::Approx;

namespace {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("estimator is flagged unavailable before rank d", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    EstimatorState est(fa.actions);
    CHECK_FALSE(est.valid);
    est.update(0, 1.0);
    CHECK_FALSE(est.valid);  // G is rank 1
    est.update(1, 0.0);
    CHECK(est.valid);
}

TEST_CASE("estimator recovers gaps exactly from noiseless pulls", "[policies]") {
    Instance e2 = make_example2(2.0, 0.1);
    GapInfo truth = compute_gaps(e2);
    EstimatorState est(e2.actions);
    for (int i = 0; i < e2.actions.k; ++i)
        est.update(i, truth.means[i]);
    REQUIRE(est.valid);
    for (int i = 0; i < e2.actions.k; ++i)
        CHECK(est.gaps_hat[i] == Approx(truth.gaps[i]).margin(1e-9));
}

TEST_CASE("estimator sample mean from repeated pulls", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    EstimatorState est(fa.actions);
    est.update(0, 1.0);
    est.update(0, 0.0);
    est.update(1, 0.0);
    REQUIRE(est.valid);
    CHECK(est.mu_hat[0] == Approx(0.5));
    CHECK(est.pulls[0] == 2);
    CHECK(est.t == 3);
}

TEST_CASE("ucb cycles every arm once then prefers under-pulled arms", "[policies]") {
    UcbPolicy ucb(3);
    for (int t = 0; t < 3; ++t) {
        const int arm = ucb.choose();
        CHECK(arm == t);
        ucb.update(arm, 0.0);
    }
    // Equal means, arm 2 pulled less: bonus decides.
    UcbPolicy u2(2);
    u2.update(0, 0.5);
    u2.update(0, 0.5);
    u2.update(1, 0.5);
    CHECK(u2.choose() == 1);
}

TEST_CASE("ucb never chooses a strictly dominated arm", "[policies]") {
    GaussianRng rng(10);
    UcbPolicy ucb(3);
    Vec means = make_vec({0.3, 0.0, -0.2});
    for (int t = 1; t <= 500; ++t) {
        const int arm = ucb.choose();
        ucb.update(arm, means[arm] + rng.normal());
    }
    // Recompute indices by hand and verify the chosen arm is maximal.
    UcbPolicy probe(3);
    std::vector<double> mean(3, 0.0);
    std::vector<std::int64_t> cnt(3, 0);
    for (int t = 1; t <= 500; ++t) {
        const int arm = probe.choose();
        if (t > 3) {
            double best = -1e300;
            for (int i = 0; i < 3; ++i)
                best = std::max(best, mean[i] + std::sqrt(2.0 * std::log(t) / cnt[i]));
            CHECK(mean[arm] + std::sqrt(2.0 * std::log(t) / cnt[arm]) == Approx(best));
        }
        const double y = means[arm] + rng.normal();
        probe.update(arm, y);
        ++cnt[arm];
        mean[arm] += (y - mean[arm]) / cnt[arm];
    }
}

TEST_CASE("optimism picks the higher mean under equal bonuses", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    OptimismPolicy pol(fa.actions, OptimisticConfig{1.0}, 100);
    // Warm start rounds: round-robin until G invertible.
    CHECK(pol.choose() == 0);
    pol.update(0, 1.0);
    CHECK(pol.choose() == 1);
    pol.update(1, 0.0);
    // G = I, mu_hat = (1, 0): equal widths, higher mean wins.
    CHECK(pol.choose() == 0);
}

TEST_CASE("optimism choice is invariant to the confidence scale under equal widths",
          "[policies]") {
    // Scaling alpha_conf by c^2 scales every bonus by c; with equal
    // quadratic forms the argmax cannot move.
    Instance fa = make_finite_armed(2, make_vec({0.3, 0.7}));
    for (double alpha : {0.25, 1.0, 4.0, 100.0}) {
        OptimismPolicy pol(fa.actions, OptimisticConfig{alpha}, 1000);
        pol.update(0, 0.3);
        pol.update(1, 0.7);  // G = I: equal widths
        CHECK(pol.choose() == 1);
    }
}

TEST_CASE("optimism and thompson reduce to the same greedy rule at zero scale",
          "[policies]") {
    Instance e2 = make_example2(2.0, 0.2);
    OptimismPolicy opt(e2.actions, OptimisticConfig{0.0}, 1000);
    ThompsonPolicy ts(e2.actions, OptimisticConfig{0.0}, 42);
    GaussianRng rng(3);
    GapInfo truth = compute_gaps(e2);
    for (int t = 0; t < 200; ++t) {
        const int a = opt.choose();
        const int b = ts.choose();
        CHECK(a == b);
        const double y = truth.means[a] + rng.normal();
        opt.update(a, y);
        ts.update(b, y);
    }
}

TEST_CASE("thompson samples have the posterior mean and a PSD covariance factor",
          "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({0.5, -0.2}));
    ThompsonPolicy ts(fa.actions, OptimisticConfig{1.0}, 7);
    ts.update(0, 0.5);
    ts.update(1, -0.2);
    // G = I: sampled scores are <x, theta_hat> + N(0,1) per coordinate.
    // Check the empirical mean of the chosen-arm scores indirectly by
    // sampling theta via the policy's own internals: re-run choose many
    // times and accumulate the implied coordinate choice frequencies.
    int wins0 = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        if (ts.choose() == 0) ++wins0;
    // theta_hat = (0.5, -0.2); P(theta0 + z0 > theta1 + z1) =
    // Phi(0.7 / sqrt(2)) = 0.6896.
    const double p = static_cast<double>(wins0) / draws;
    CHECK(p == Approx(0.6896).margin(0.02));
}

TEST_CASE("three-phase policy: warm-up length and phase transitions", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    const std::int64_t n = 20;
    OptimalAlgPolicy pol(fa.actions, n);
    // ceil(sqrt(log 20)) = 2, times d = 2: four warm-up rounds.
    CHECK(pol.warmup_per_arm() == 2);
    CHECK(pol.warmup_rounds() == 4);

    BanditEnv env(fa, n, 5);
    env.set_noiseless(true);
    std::vector<Phase> seen;
    for (int t = 0; t < n; ++t) {
        const int arm = pol.choose();
        const Observation obs = env.pull(arm);
        pol.update(arm, obs.reward);
        seen.push_back(pol.phase());
    }
    // Monotone prefix of warmup -> success, never recovery (noiseless).
    for (std::size_t i = 0; i + 1 < seen.size(); ++i)
        CHECK(static_cast<int>(seen[i]) <= static_cast<int>(seen[i + 1]));
    CHECK(seen[2] == Phase::kWarmup);
    CHECK(seen[3] == Phase::kSuccess);  // transition fires at the end of warm-up
    CHECK(seen.back() == Phase::kSuccess);
}

TEST_CASE("three-phase policy: anomaly test passes with unchanged estimates",
          "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    OptimalAlgPolicy pol(fa.actions, 50);
    BanditEnv env(fa, 50, 11);
    env.set_noiseless(true);
    // Run through warm-up plus one success round: with noiseless data the
    // snapshot never moves, so the phase must remain success.
    for (int t = 0; t < int(pol.warmup_rounds()) + 1; ++t) {
        const int arm = pol.choose();
        pol.update(arm, env.pull(arm).reward);
    }
    CHECK(pol.phase() == Phase::kSuccess);
    CHECK(pol.eps_n() > 0.0);
}

TEST_CASE("three-phase policy: noiseless run plays exactly the quota", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    const std::int64_t n = 400;
    OptimalAlgPolicy pol(fa.actions, n);
    BanditEnv env(fa, n, 17);
    env.set_noiseless(true);
    for (std::int64_t t = 0; t < n; ++t) {
        const int arm = pol.choose();
        pol.update(arm, env.pull(arm).reward);
    }
    CHECK(pol.phase() == Phase::kSuccess);  // never enters recovery
    REQUIRE(pol.quota_is_finite()[1]);
    // Suboptimal pulls stop at the quota; warm-up pulls count toward it.
    const std::int64_t expected = std::max<std::int64_t>(pol.quotas()[1],
                                                         pol.warmup_per_arm());
    CHECK(env.pull_counts()[1] == expected);
    CHECK(env.pull_counts()[0] == n - expected);
}

TEST_CASE("policy_run produces deterministic, nondecreasing traces", "[policies]") {
    Instance e2 = make_example2(2.0, 0.1);
    auto run_once = [&](bool full) {
        BanditEnv env(e2, 128, 23);
        UcbPolicy pol(e2.actions.k);
        return policy_run(pol, env, full);
    };
    RegretTrace full = run_once(true);
    CHECK(full.points.size() == 128);
    double prev = 0.0;
    for (const auto& p : full.points) {
        CHECK(p.cum_regret >= prev);
        prev = p.cum_regret;
    }
    RegretTrace again = run_once(true);
    CHECK(full.final_cum_regret == again.final_cum_regret);
    for (std::size_t i = 0; i < full.points.size(); ++i)
        CHECK(full.points[i].arm == again.points[i].arm);

    RegretTrace thin = run_once(false);
    CHECK(thin.points.size() == 8);  // 1,2,4,...,128 (horizon is a power of two)
    CHECK(thin.final_cum_regret == full.final_cum_regret);
}

TEST_CASE("policy factory covers the configuration surface", "[policies]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    for (const char* name : {"ucb", "oful", "lints", "optimal"}) {
        auto p = make_policy(PolicyConfig{name, 1.0, 1.0}, fa.actions, 100, 9);
        CHECK(p->name() == name);
    }
    CHECK_THROWS_AS(make_policy(PolicyConfig{"egreedy", 1.0, 1.0}, fa.actions, 100, 9),
                    ConfigError);
}
