#include <catch2/catch_amalgamated.hpp>

#include "linbandit/design.hpp"
#include "linbandit/conc.hpp"
#include "oracles.hpp"

using namespace linbandit;
using Catch::Approx;

namespace {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Instance random_instance(int d, int k, GaussianRng& rng, double min_gap = 0.05,
                         double max_gap = 2.0) {
    for (;;) {
        std::vector<Vec> arms;
        for (int i = 0; i < k; ++i) {
            Vec x(d);
            for (int c = 0; c < d; ++c) x[c] = rng.normal();
            const double nrm = x.norm();
            if (nrm < 1e-6) {
                --i;
                continue;
            }
            x /= std::max(1.0, nrm);  // keep within the unit ball
            arms.push_back(x);
        }
        Vec theta(d);
        for (int c = 0; c < d; ++c) theta[c] = rng.normal();
        Instance inst{make_action_set(arms), theta, "random"};
        ValidationReport rep = validate(inst);
        if (!rep.spans || !rep.unique_optimum || !rep.duplicate_arms.empty()) continue;
        GapInfo g = compute_gaps(inst);
        if (g.gap_min < min_gap || g.gap_max > max_gap) continue;
        return inst;
    }
}

}  // namespace

TEST_CASE("standard basis is its own spanner", "[design]") {
    Instance fa = make_finite_armed(3, make_vec({1, 0.5, 0}));
    Spanner sp = barycentric_spanner(fa.actions, 1.0);
    std::vector<int> idx = sp.indices;
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<int>{0, 1, 2});
    for (int i = 0; i < 3; ++i) {
        Vec coef = spanner_coefficients(fa.actions.arms[i], sp, fa.actions);
        CHECK(coef.cwiseAbs().maxCoeff() == Approx(1.0));
        CHECK(coef.cwiseAbs().sum() == Approx(1.0));
    }
}

TEST_CASE("spanner of the three-arm nearly-collinear instance", "[design]") {
    Instance e2 = make_example2(2.0, 0.01);
    Spanner sp = barycentric_spanner(e2.actions, 1.0);
    std::vector<int> idx = sp.indices;
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<int>{0, 1});  // {(1,0),(0,1)} maximises |det|
    Vec coef = spanner_coefficients(e2.actions.arms[2], sp, e2.actions);
    // Third arm (0.99, 0.02): coefficients from the 2x2 solve.
    const int slot0 = sp.indices[0] == 0 ? 0 : 1;
    CHECK(coef[slot0] == Approx(0.99));
    CHECK(coef[1 - slot0] == Approx(0.02));
    CHECK(coef.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("spanner coefficients stay within the approximation factor", "[design]") {
    GaussianRng rng(314);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Vec> arms;
        for (int i = 0; i < 50; ++i) {
            Vec x(4);
            for (int c = 0; c < 4; ++c) x[c] = rng.normal();
            x.normalize();
            arms.push_back(x);
        }
        ActionSet actions = make_action_set(arms);
        for (double C : {1.0, 1.5}) {
            Spanner sp = barycentric_spanner(actions, C);
            for (const auto& x : actions.arms) {
                Vec coef = spanner_coefficients(x, sp, actions);
                CHECK(coef.cwiseAbs().maxCoeff() <= C + 1e-9);
            }
        }
    }
}

TEST_CASE("spanner requires spanning arms", "[design]") {
    std::vector<Vec> arms{make_vec({1, 0}), make_vec({0.5, 0})};
    CHECK_THROWS_AS(barycentric_spanner(make_action_set(arms), 1.0), RankDeficientError);
    CHECK_THROWS_AS(barycentric_spanner(make_finite_armed(2, make_vec({1, 0})).actions, 0.5),
                    std::invalid_argument);
}

TEST_CASE("allocation on orthonormal arms has the closed-form value", "[design]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    Allocation a = solve_allocation(fa.actions, compute_gaps(fa));
    CHECK(a.value == Approx(2.0).epsilon(1e-3));
    CHECK(a.weights[1] == Approx(2.0).epsilon(1e-3));  // 1/alpha <= 1/2 active
    CHECK(a.optimal_arm == 0);
    CHECK(a.optimal_arm_unbounded);
    CHECK(a.residuals.maxCoeff() <= 1e-6);
}

TEST_CASE("allocation on the information-tradeoff instances", "[design]") {
    Instance e2 = make_example2(2.0, 1e-3);
    CHECK(lower_bound_constant(e2) == Approx(8.0).epsilon(0.01));

    // Removing the informative arm (0,1) makes the problem much harder.
    Instance no_x2{make_action_set({make_vec({1.0, 0.0}), make_vec({0.99, 0.02})}),
                   make_vec({1.0, 0.0}),
                   ""};
    CHECK(lower_bound_constant(no_x2) == Approx(200.0).epsilon(0.01));

    Instance ce = make_counterexample(1.0, 1e-3);
    CHECK(lower_bound_constant(ce) == Approx(128.0).epsilon(0.01));
}

TEST_CASE("allocation value halves when gaps double", "[design]") {
    GaussianRng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        const int d = 2 + trial;
        Vec theta(d);
        theta[0] = 1.0;
        for (int i = 1; i < d; ++i) theta[i] = 1.0 - (0.1 + 0.9 * rng.uniform01());
        Instance inst = make_finite_armed(d, theta);
        Vec theta2 = 2.0 * theta.array() - 1.0;  // doubles every gap to e_best
        Instance inst2 = make_finite_armed(d, theta2);
        const double v1 = lower_bound_constant(inst);
        const double v2 = lower_bound_constant(inst2);
        CHECK(v2 == Approx(v1 / 2.0).epsilon(5e-3));
    }
}

TEST_CASE("allocation rejects non-unique optima", "[design]") {
    const double s = 1.0 / std::sqrt(2.0);
    Instance tie = make_finite_armed(2, make_vec({s, s}));
    CHECK_THROWS_AS(solve_allocation(tie.actions, compute_gaps(tie)), NonUniqueOptimumError);
}

TEST_CASE("allocation matches the grid oracle on random 2x3 instances", "[design]") {
    GaussianRng rng(2718);
    for (int trial = 0; trial < 6; ++trial) {
        Instance inst = random_instance(2, 3, rng);
        const double solver = lower_bound_constant(inst);
        const double oracle = oracles::grid_oracle_value(inst);
        CHECK(solver == Approx(oracle).epsilon(0.02));
    }
}

TEST_CASE("allocation on larger instances: feasible and within the spanner ceiling",
          "[design]") {
    GaussianRng rng(77);
    for (int trial = 0; trial < 6; ++trial) {
        const int d = 3 + trial % 3;
        const int k = d + 2 + trial % 4;
        Instance inst = random_instance(d, k, rng);
        GapInfo gaps = compute_gaps(inst);
        Allocation a = solve_allocation(inst.actions, gaps);
        CHECK(a.residuals.maxCoeff() <= 1e-6);
        CHECK(a.value > 0.0);
        // The solver never returns worse than the spanner warm start, whose
        // value is at most 2 d^3 gap_max / gap_min^2.
        CHECK(a.value <=
              2.0 * d * d * d * gaps.gap_max / (gaps.gap_min * gaps.gap_min) * (1.0 + 1e-9));
    }
}

TEST_CASE("doubling the optimal-arm cap leaves the value unchanged", "[design]") {
    Instance e2 = make_example2(2.0, 1e-3);
    GapInfo gaps = compute_gaps(e2);
    AllocationOptions opts;
    Allocation a = solve_allocation(e2.actions, gaps, 1e-6, opts);
    AllocationOptions doubled = opts;
    doubled.initial_cap_factor = 2.0 * (a.cap_used / (1.0 + a.weights.sum() - a.cap_used));
    Allocation b = solve_allocation(e2.actions, gaps, 1e-6, doubled);
    CHECK(b.value == Approx(a.value).epsilon(1e-3));
}

TEST_CASE("constraint gradient closed form", "[design]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    Vec grad = constraint_gradient(make_vec({1, 1}), fa.actions, make_vec({1, 0}));
    CHECK(grad[0] == Approx(-1.0));
    CHECK(grad[1] == Approx(0.0).margin(1e-15));

    // Component for an arm orthogonal to H^-1 x vanishes.
    Vec grad2 = constraint_gradient(make_vec({2, 3}), fa.actions, make_vec({1, 0}));
    CHECK(grad2[1] == Approx(0.0).margin(1e-15));

    CHECK_THROWS_AS(
        constraint_gradient(make_vec({1, 0}), fa.actions, make_vec({1, 0})),
        SingularMatrixError);
}

TEST_CASE("constraint gradient matches central finite differences", "[design]") {
    GaussianRng rng(555);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 2 + trial % 3;
        const int k = d + 1 + trial % 4;
        Instance inst = random_instance(d, k, rng);
        std::vector<double> alpha(k);
        Vec alpha_vec(k);
        for (int i = 0; i < k; ++i) {
            alpha[i] = 0.5 + 1.5 * rng.uniform01();
            alpha_vec[i] = alpha[i];
        }
        const int probe = trial % k;
        Vec grad = constraint_gradient(alpha_vec, inst.actions, inst.actions.arms[probe]);
        auto fd = oracles::fd_constraint_gradient(inst.actions, alpha,
                                                  inst.actions.arms[probe]);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < k; ++i) {
            num += (grad[i] - fd[i]) * (grad[i] - fd[i]);
            den += grad[i] * grad[i];
        }
        CHECK(std::sqrt(num) <= 1e-5 * std::max(1e-8, std::sqrt(den)));
    }
}

TEST_CASE("pull plan scales the allocation by f_n / 2", "[design]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    PullPlan plan = pull_plan(compute_gaps(fa).gaps, fa.actions, 100, 10.0);
    CHECK(plan.counts[1] == Approx(10.0).epsilon(1e-3));  // (f_n/2) * 2
    CHECK(plan.unbounded[0]);
    CHECK_FALSE(plan.unbounded[1]);

    // Direct constraint evaluation at the Delta^2 / f_n level.
    Mat h = Mat::Zero(2, 2);
    h += plan.counts[1] * fa.actions.arms[1] * fa.actions.arms[1].transpose();
    h += 1e9 * fa.actions.arms[0] * fa.actions.arms[0].transpose();
    CHECK(quad_form_inv(h, fa.actions.arms[1]) <= 1.0 / 10.0 * (1.0 + 1e-6));
}

TEST_CASE("pull plan rejects gap vectors with tied leaders", "[design]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    CHECK_THROWS_AS(pull_plan(make_vec({0, 0}), fa.actions, 100, 10.0),
                    NonUniqueOptimumError);
    CHECK_THROWS_AS(pull_plan(make_vec({0.5, 0.2}), fa.actions, 100, 10.0),
                    std::invalid_argument);  // no zero-gap arm
    CHECK_THROWS_AS(pull_plan(make_vec({0, 1}), fa.actions, 1, 10.0),
                    std::invalid_argument);  // n < 2
}

TEST_CASE("pull plans respect the naive total bound", "[design]") {
    GaussianRng rng(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int d = 2 + trial % 3;
        Instance inst = random_instance(d, d + 2, rng);
        GapInfo gaps = compute_gaps(inst);
        const double f_n = f_delta(100000, 1e-5, d, 1.0);
        PullPlan plan = pull_plan(gaps.gaps, inst.actions, 100000, f_n);
        CHECK(plan.total_finite() <= naive_bound(gaps, d, f_n));
    }
}

TEST_CASE("truncated plan clips at m times f_n", "[design]") {
    Instance fa = make_finite_armed(2, make_vec({1, 0}));
    PullPlan plan = pull_plan(compute_gaps(fa).gaps, fa.actions, 100, 10.0);
    // Cap above every finite count: unchanged.
    auto wide = truncated_plan(plan, 2);  // cap 20 > count 10
    CHECK(wide[1] == Approx(plan.counts[1]));
    CHECK(wide[0] == Approx(20.0));  // unbounded entry becomes m f_n

    PullPlan tight = plan;
    tight.f_n = 5.0;  // cap 5 < count 10
    auto clipped = truncated_plan(tight, 1);
    CHECK(clipped[1] == Approx(5.0));

    CHECK_THROWS_AS(truncated_plan(plan, 0), std::invalid_argument);
}

TEST_CASE("naive bound formula and scalings", "[design]") {
    GapInfo g;
    g.gap_min = 1.0;
    g.gap_max = 1.0;
    CHECK(naive_bound(g, 2, 10.0) == Approx(160.0));

    // Diverges monotonically as gap_min shrinks.
    double prev = 0.0;
    for (double dm : {1.0, 0.5, 0.25, 0.1}) {
        GapInfo gi;
        gi.gap_min = dm;
        gi.gap_max = 1.0;
        const double b = naive_bound(gi, 2, 10.0);
        CHECK(b > prev);
        prev = b;
    }

    CHECK(naive_bound(g, 4, 10.0) == Approx(8.0 * naive_bound(g, 2, 10.0)));

    GapInfo zero;
    zero.gap_min = 0.0;
    CHECK_THROWS_AS(naive_bound(zero, 2, 10.0), std::domain_error);
}
