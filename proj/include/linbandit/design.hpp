#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "instances.hpp"
#include "linalg.hpp"

namespace linbandit {

// ---------------------------------------------------------------------------
// Barycentric spanner

/// d arm indices expressing every arm with coefficients in [-C, C].
struct Spanner {
    std::vector<int> indices;
    double approximation_factor = 1.0;
};

namespace detail {

inline Mat basis_matrix(const ActionSet& actions, const std::vector<int>& idx) {
    Mat b(actions.d, actions.d);
    for (int j = 0; j < actions.d; ++j) b.col(j) = actions.arms[idx[j]];
    return b;
}

}  // namespace detail

/// Greedy determinant-maximising basis followed by swap improvement: while
/// some arm x and slot i satisfy |coef_i(x)| > C, swapping x into slot i
/// multiplies |det| by |coef_i(x)| > C, so the loop terminates.
inline Spanner barycentric_spanner(const ActionSet& actions, double C = 1.0) {
    if (C < 1.0) throw std::invalid_argument("barycentric_spanner: C must be >= 1");
    const int d = actions.d;
    const int k = actions.k;

    // Greedy init: pick the arm with the largest residual against the span
    // of those already chosen (maximises the volume extension).
    std::vector<int> chosen;
    Mat q(d, d);  // orthonormal columns spanning chosen arms
    int ncols = 0;
    for (int slot = 0; slot < d; ++slot) {
        int best = -1;
        double best_res = 0.0;
        for (int i = 0; i < k; ++i) {
            Vec r = actions.arms[i];
            for (int c = 0; c < ncols; ++c) r -= q.col(c).dot(actions.arms[i]) * q.col(c);
            const double res = r.norm();
            if (res > best_res) {
                best_res = res;
                best = i;
            }
        }
        if (best < 0 || best_res <= 1e-10)
            throw RankDeficientError("barycentric_spanner: arms do not span the space");
        chosen.push_back(best);
        Vec r = actions.arms[best];
        for (int c = 0; c < ncols; ++c) r -= q.col(c).dot(actions.arms[best]) * q.col(c);
        q.col(ncols++) = r / r.norm();
    }

    // Swap phase; a swap must grow |det| by a factor > C(1 + 1e-12), so
    // numerically tied determinants cannot cycle.
    const double accept = C * (1.0 + 1e-12);
    for (int iter = 0; iter < 100000; ++iter) {
        Mat basis = detail::basis_matrix(actions, chosen);
        Eigen::PartialPivLU<Mat> lu(basis);
        bool swapped = false;
        for (int i = 0; i < k && !swapped; ++i) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            Vec coef = lu.solve(actions.arms[i]);
            for (int slot = 0; slot < d; ++slot) {
                if (std::abs(coef[slot]) > accept) {
                    chosen[slot] = i;
                    swapped = true;
                    break;
                }
            }
        }
        if (!swapped) return Spanner{chosen, C};
    }
    throw InfeasibleNumericsError("barycentric_spanner: swap phase failed to terminate");
}

/// Coefficients of x in the spanner basis (exact linear solve).
inline Vec spanner_coefficients(const Vec& x, const Spanner& sp, const ActionSet& actions) {
    Mat basis = detail::basis_matrix(actions, sp.indices);
    Eigen::FullPivLU<Mat> lu(basis);
    lu.setThreshold(1e-10);
    if (lu.rank() < actions.d)
        throw RankDeficientError("spanner_coefficients: basis is rank deficient");
    return lu.solve(x);
}

// ---------------------------------------------------------------------------
// Allocation program
//
//   minimise   sum_{x suboptimal} alpha_x Delta_x
//   subject to ||x||^2_{H(alpha)^-1} <= Delta_x^2 / 2  for suboptimal x,
//              H(alpha) = sum_x alpha_x x x^T,  alpha >= 0.
//
// The optimal arm's weight enters H at zero cost, so the infimum pushes it
// to infinity. It is represented by a large cap proportional to the
// suboptimal mass; the cap factor escalates tenfold until the value is
// insensitive (relative change < 1e-3), making the limit explicit and
// testable.

struct Allocation {
    Vec weights;                       // per-arm rates; optimal arm holds the cap actually used
    double value = 0.0;                // sum over suboptimal arms of weight * gap
    bool optimal_arm_unbounded = true; // the cap stands in for an unbounded weight
    int optimal_arm = -1;
    double cap_used = 0.0;
    Vec residuals;  // ||x||^2_{H^-1} - Delta_x^2/2 per arm (0 for the optimal arm)
};

struct AllocationOptions {
    double feasibility_tol = 1e-6;
    double value_tol = 1e-3;          // relative; also the cap-escalation stop rule
    double initial_cap_factor = 1e6;
    double max_cap_factor = 1e14;
    int max_inner_iters = 2000;
    int max_lambda_rungs = 14;
};

namespace detail {

// Assemble H(alpha) with the optimal arm at cap and factor it. Returns
// false if the factorisation fails (numerically non-PD).
inline bool assemble_and_factor(const ActionSet& actions, const std::vector<int>& sub, int opt,
                                const Vec& alpha_sub, double cap, Mat& h, Eigen::LLT<Mat>& llt) {
    h.setZero();
    for (std::size_t j = 0; j < sub.size(); ++j) {
        const Vec& x = actions.arms[sub[j]];
        h.noalias() += alpha_sub[j] * (x * x.transpose());
    }
    const Vec& xs = actions.arms[opt];
    h.noalias() += cap * (xs * xs.transpose());
    llt.compute(h);
    return llt.info() == Eigen::Success;
}

}  // namespace detail

/// Derivative of the constraint value ||x||^2_{H(alpha)^-1} with respect to
/// each weight alpha_y: component y equals -(x^T H^-1 y)^2.
inline Vec constraint_gradient(const Vec& alpha, const ActionSet& actions, const Vec& x) {
    if (alpha.size() != actions.k)
        throw std::invalid_argument("constraint_gradient: alpha must have one entry per arm");
    Mat h = Mat::Zero(actions.d, actions.d);
    for (int i = 0; i < actions.k; ++i)
        h.noalias() += alpha[i] * (actions.arms[i] * actions.arms[i].transpose());
    Vec v = psd_solve(h, x);  // throws SingularMatrixError when H is singular
    Vec grad(actions.k);
    for (int y = 0; y < actions.k; ++y) {
        const double inner = v.dot(actions.arms[y]);
        grad[y] = -inner * inner;
    }
    return grad;
}

inline Allocation solve_allocation(const ActionSet& actions, const GapInfo& gaps,
                                   double tol = 1e-6, const AllocationOptions& base_opts = {}) {
    AllocationOptions opts = base_opts;
    opts.feasibility_tol = tol;
    if (gaps.optimal_indices.size() != 1)
        throw NonUniqueOptimumError("solve_allocation: the optimal arm must be unique");
    const int opt = gaps.optimal_indices[0];
    const int d = actions.d;
    const int k = actions.k;

    std::vector<int> sub;
    for (int i = 0; i < k; ++i)
        if (i != opt) {
            if (gaps.gaps[i] <= kTieTol)
                throw NonUniqueOptimumError("solve_allocation: zero-gap non-optimal arm");
            sub.push_back(i);
        }
    const int ns = static_cast<int>(sub.size());

    Allocation out;
    out.weights = Vec::Zero(k);
    out.residuals = Vec::Zero(k);
    out.optimal_arm = opt;
    if (ns == 0) {  // single-arm action set: nothing to identify
        out.cap_used = opts.initial_cap_factor;
        out.weights[opt] = out.cap_used;
        return out;
    }

    Vec gap_sub(ns), bounds(ns);
    for (int j = 0; j < ns; ++j) {
        gap_sub[j] = gaps.gaps[sub[j]];
        bounds[j] = gap_sub[j] * gap_sub[j] / 2.0;
    }

    // Warm start: spanner arms at 2 d^2 / Delta_min^2 (feasible by the
    // coefficient bound). Non-spanner arms start at 1% of that weight;
    // log-space descent moves a coordinate proportionally to its current
    // weight, and a near-zero start cannot wake up.
    const double warm_weight = 2.0 * d * d / (gaps.gap_min * gaps.gap_min);
    Vec spanner_only = Vec::Zero(ns);
    Vec alpha = Vec::Constant(ns, 0.01 * warm_weight);
    {
        Spanner sp = barycentric_spanner(actions, 1.0);
        bool any = false;
        for (int idx : sp.indices)
            for (int j = 0; j < ns; ++j)
                if (sub[j] == idx) {
                    spanner_only[j] = warm_weight;
                    alpha[j] = warm_weight;
                    any = true;
                }
        if (!any) spanner_only = alpha;  // spanner is just the optimal arm (d == 1)
    }

    Mat h(d, d);
    Eigen::LLT<Mat> llt;
    Mat sub_mat(ns, d);
    for (int j = 0; j < ns; ++j) sub_mat.row(j) = actions.arms[sub[j]].transpose();

    // Constraint values c_j = ||x_j||^2_{H^-1} and M = X H^-1 X^T over the
    // suboptimal arms (M gives all constraint gradients at once). The cap's
    // own dependence on sum(alpha) contributes O(1/cap) to the gradient and
    // is ignored.
    double cap_factor = opts.initial_cap_factor;
    Mat hinv_x(d, ns), m(ns, ns);
    Vec cvals(ns);
    auto eval_constraints = [&](const Vec& a, bool with_grad) -> bool {
        const double cap = cap_factor * (1.0 + a.sum());
        if (!detail::assemble_and_factor(actions, sub, opt, a, cap, h, llt)) return false;
        for (int j = 0; j < ns; ++j) {
            hinv_x.col(j) = llt.solve(actions.arms[sub[j]]);
            cvals[j] = actions.arms[sub[j]].dot(hinv_x.col(j));
        }
        if (with_grad) m.noalias() = sub_mat * hinv_x;
        return cvals.allFinite();
    };

    // Scale-to-feasible: c_j(t a) = c_j(a)/t, so t = max_j c_j/b_j makes the
    // worst constraint exactly tight and multiplies the objective by t.
    auto scaled_value = [&](const Vec& a) -> double {
        if (!eval_constraints(a, false)) return std::numeric_limits<double>::infinity();
        double t = 0.0;
        for (int j = 0; j < ns; ++j) t = std::max(t, cvals[j] / bounds[j]);
        if (!(t > 0.0)) return 0.0;  // constraints satisfied by the cap alone
        return t * a.dot(gap_sub);
    };

    // Seed best-so-far with the scaled pure-spanner allocation; the final
    // value can only improve on it, which keeps the naive quota bound
    // guaranteed for every returned plan.
    double best_value = scaled_value(spanner_only);
    Vec best_alpha = spanner_only.cwiseMax(1e-12);
    double best_cap_factor = cap_factor;
    double prev_cap_value = std::numeric_limits<double>::quiet_NaN();

    for (; cap_factor <= opts.max_cap_factor; cap_factor *= 10.0) {
        Vec beta = alpha.array().log().matrix();
        double lambda = 1.0;
        double cap_best = scaled_value(alpha);
        Vec cap_best_alpha = alpha;

        for (int rung = 0; rung < opts.max_lambda_rungs; ++rung) {
            double step = 0.05;
            double fprev = std::numeric_limits<double>::infinity();
            Vec beta_prev = beta;
            for (int it = 0; it < opts.max_inner_iters; ++it) {
                Vec a = beta.array().exp().matrix();
                if (!eval_constraints(a, true)) {
                    beta = beta_prev;
                    step *= 0.5;
                    if (step < 1e-14) break;
                    continue;
                }
                const double f =
                    a.dot(gap_sub) + lambda * (cvals - bounds).cwiseMax(0.0).squaredNorm();
                if (f > fprev) {
                    beta = beta_prev;
                    step *= 0.5;
                    if (step < 1e-14) break;
                    continue;
                }
                beta_prev = beta;
                fprev = f;
                // d f / d beta_j = a_j (Delta_j - 2 lambda sum_i viol_i (x_i^T H^-1 x_j)^2)
                Vec viol = (cvals - bounds).cwiseMax(0.0);
                Vec grad(ns);
                for (int j = 0; j < ns; ++j) {
                    double pen = 0.0;
                    for (int i = 0; i < ns; ++i) {
                        const double mij = m(i, j);
                        pen += viol[i] * mij * mij;
                    }
                    grad[j] = a[j] * (gap_sub[j] - 2.0 * lambda * pen);
                }
                const double gmax = std::max(1.0, grad.cwiseAbs().maxCoeff());
                beta -= (step / gmax) * grad;
                step *= 1.05;
            }
            Vec a = beta.array().exp().matrix();
            const double val = scaled_value(a);
            if (val < cap_best) {
                cap_best = val;
                cap_best_alpha = a;
            }
            if (eval_constraints(a, false) && (cvals - bounds).maxCoeff() <= opts.feasibility_tol)
                break;
            lambda *= 10.0;
        }

        if (cap_best < best_value || !std::isfinite(best_value)) {
            best_value = cap_best;
            best_alpha = cap_best_alpha;
            best_cap_factor = cap_factor;
        }
        alpha = cap_best_alpha;  // warm start the next cap rung
        if (std::isfinite(prev_cap_value) && std::isfinite(cap_best) &&
            std::abs(cap_best - prev_cap_value) <= opts.value_tol * std::abs(prev_cap_value)) {
            best_cap_factor = cap_factor;
            break;
        }
        prev_cap_value = cap_best;
    }

    if (!std::isfinite(best_value))
        throw InfeasibleNumericsError("solve_allocation: failed to reach a feasible allocation");

    // Report the feasibility-scaled solution at the final cap. The cap
    // shifts slightly when the weights are rescaled, so iterate the exact
    // scaling a few times.
    cap_factor = best_cap_factor;
    Vec a = best_alpha;
    for (int pass = 0; pass < 4; ++pass) {
        if (!eval_constraints(a, false))
            throw InfeasibleNumericsError("solve_allocation: degenerate design matrix");
        double t = 0.0;
        for (int j = 0; j < ns; ++j) t = std::max(t, cvals[j] / bounds[j]);
        if (!(t > 0.0)) {
            a.setZero();
            break;
        }
        a *= t;
        if (std::abs(t - 1.0) <= 1e-13) break;
    }

    out.cap_used = cap_factor * (1.0 + a.sum());
    for (int j = 0; j < ns; ++j) out.weights[sub[j]] = a[j];
    out.weights[opt] = out.cap_used;
    out.value = a.dot(gap_sub);
    eval_constraints(a, false);
    for (int j = 0; j < ns; ++j) out.residuals[sub[j]] = cvals[j] - bounds[j];
    if (out.residuals.maxCoeff() > opts.feasibility_tol)
        throw InfeasibleNumericsError("solve_allocation: residuals exceed tolerance");
    return out;
}

/// The instance-dependent constant of the asymptotic regret lower bound.
inline double lower_bound_constant(const Instance& inst) {
    return solve_allocation(inst.actions, compute_gaps(inst)).value;
}

// ---------------------------------------------------------------------------
// Pull plans

/// Per-arm pull quotas making every estimated gap identifiable at the f_n
/// confidence level. Arms with zero estimated gap get an unbounded quota.
struct PullPlan {
    std::vector<double> counts;     // finite entries; meaningless where unbounded
    std::vector<bool> unbounded;
    std::int64_t n = 0;
    double f_n = 0.0;

    double total_finite() const {
        double s = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (!unbounded[i]) s += counts[i];
        return s;
    }
};

/// Quotas T = (f_n / 2) alpha*, where alpha* solves the allocation program
/// with the supplied gaps: scaling weights by c divides every constraint
/// value by c, which maps the Delta^2/2 bound onto Delta^2/f_n.
inline PullPlan pull_plan(const Vec& gaps_hat, const ActionSet& actions, std::int64_t n,
                          double f_n) {
    if (n < 2) throw std::invalid_argument("pull_plan: n must be >= 2");
    if (!(f_n > 0.0)) throw std::invalid_argument("pull_plan: f_n must be positive");
    if (gaps_hat.size() != actions.k)
        throw std::invalid_argument("pull_plan: gaps must have one entry per arm");

    GapInfo gi;
    gi.gaps = gaps_hat;
    gi.gap_min = 0.0;
    gi.gap_max = gaps_hat.maxCoeff();
    for (int i = 0; i < actions.k; ++i) {
        if (gaps_hat[i] <= kTieTol) {
            gi.gaps[i] = 0.0;
            gi.optimal_indices.push_back(i);
        } else if (gi.gap_min == 0.0 || gaps_hat[i] < gi.gap_min) {
            gi.gap_min = gaps_hat[i];
        }
    }
    if (gi.optimal_indices.empty())
        throw std::invalid_argument("pull_plan: at least one arm must have zero gap");
    Allocation alloc = solve_allocation(actions, gi);  // throws NonUniqueOptimum on ties

    PullPlan plan;
    plan.n = n;
    plan.f_n = f_n;
    plan.counts.assign(actions.k, 0.0);
    plan.unbounded.assign(actions.k, false);
    for (int i = 0; i < actions.k; ++i) {
        if (i == alloc.optimal_arm)
            plan.unbounded[i] = true;
        else
            plan.counts[i] = 0.5 * f_n * alloc.weights[i];
    }
    return plan;
}

/// Entrywise min{m f_n, T_x}; unbounded entries become m f_n.
inline std::vector<double> truncated_plan(const PullPlan& plan, int m) {
    if (m < 1) throw std::invalid_argument("truncated_plan: m must be >= 1");
    const double cap = static_cast<double>(m) * plan.f_n;
    std::vector<double> out(plan.counts.size());
    for (std::size_t i = 0; i < plan.counts.size(); ++i)
        out[i] = plan.unbounded[i] ? cap : std::min(cap, plan.counts[i]);
    return out;
}

/// Closed-form ceiling on the total suboptimal quota mass:
/// 2 d^3 f_n Delta_max / Delta_min^3.
inline double naive_bound(const GapInfo& gaps, int d, double f_n) {
    if (!(gaps.gap_min > 0.0)) throw std::domain_error("naive_bound: gap_min must be positive");
    return 2.0 * d * d * d * f_n * gaps.gap_max /
           (gaps.gap_min * gaps.gap_min * gaps.gap_min);
}

}  // namespace linbandit
