#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "design.hpp"
#include "env.hpp"
#include "instances.hpp"
#include "parallel.hpp"
#include "policies.hpp"

namespace linbandit {

// ---------------------------------------------------------------------------
// Experiment configuration
//
// {
//   "instance": { "arms": [...], "theta": [...] } | "path/to/instance.json",
//   "horizon": 1000,
//   "policies": [ { "name": "ucb" }, { "name": "oful", "alpha_conf": 2.0 } ],
//   "reps": 8,
//   "base_seed": 1,
//   "outputs": { "trace": "trace.csv", "summary": "summary.csv" },
//   "full_trace"?: false,
//   "threads"?: 0
// }

struct ExperimentConfig {
    Instance instance;
    std::int64_t horizon = 0;
    std::vector<PolicyConfig> policies;
    int reps = 1;
    std::uint64_t base_seed = 0;
    std::string trace_path;
    std::string summary_path;
    bool full_trace = false;
    int threads = 0;
};

inline ExperimentConfig parse_experiment(const nlohmann::json& j,
                                         const std::string& context = "experiment") {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("instance")) throw ConfigError(context + ": missing field 'instance'");
    const auto& inst = j.at("instance");
    if (inst.is_string())
        cfg.instance = load_instance(inst.get<std::string>());
    else
        cfg.instance = parse_instance(inst, context + ".instance");
    if (!j.contains("horizon") || !j.at("horizon").is_number_integer())
        throw ConfigError(context + ": field 'horizon' must be an integer");
    cfg.horizon = j.at("horizon").get<std::int64_t>();
    if (cfg.horizon < 1) throw ConfigError(context + ": horizon must be >= 1");
    if (!j.contains("policies") || !j.at("policies").is_array() || j.at("policies").empty())
        throw ConfigError(context + ": field 'policies' must be a non-empty array");
    for (std::size_t p = 0; p < j.at("policies").size(); ++p) {
        const auto& pj = j.at("policies").at(p);
        const std::string pctx = context + ".policies[" + std::to_string(p) + "]";
        if (!pj.is_object() || !pj.contains("name"))
            throw ConfigError(pctx + ": must be an object with a 'name'");
        PolicyConfig pc;
        pc.name = pj.at("name").get<std::string>();
        pc.alpha_conf = pj.value("alpha_conf", 1.0);
        pc.c_univ = pj.value("c_univ", 1.0);
        if (pc.name != "ucb" && pc.name != "oful" && pc.name != "lints" && pc.name != "optimal")
            throw ConfigError(pctx + ": unknown policy name '" + pc.name + "'");
        cfg.policies.push_back(std::move(pc));
    }
    cfg.reps = j.value("reps", 1);
    if (cfg.reps < 1) throw ConfigError(context + ": reps must be >= 1");
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("outputs")) {
        const auto& out = j.at("outputs");
        cfg.trace_path = out.value("trace", std::string{});
        cfg.summary_path = out.value("summary", std::string{});
    }
    cfg.full_trace = j.value("full_trace", false);
    cfg.threads = j.value("threads", 0);
    return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open experiment file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("experiment file '" + path + "': " + e.what());
    }
    return parse_experiment(j, path);
}

// ---------------------------------------------------------------------------
// Monte Carlo execution

/// Mean over replications of the final Gram matrix sum_x T_x(n) x x^T.
struct GramAverage {
    Mat mean_final_gram;
    int reps = 0;
};

struct PolicySummary {
    std::string policy;
    std::int64_t n = 0;
    int reps = 0;
    double mean_final_regret = 0.0;
    double stderr_final_regret = 0.0;
    double regret_over_log_n = 0.0;
    double c_lower_bound = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> mean_pulls;
    GramAverage gram;
};

struct ExperimentResult {
    std::vector<RegretTrace> traces;  // policy-major, then replication order
    std::vector<PolicySummary> summaries;
};

/// Replication seeds: the environment stream for (policy p, rep r) is
/// mix_seed(mix_seed(mix_seed(base, p), r), 0) and a policy's private
/// stream (Thompson sampling) is mix_seed(..., 1). Results are assembled
/// in (policy, rep) order, so output is independent of the thread
/// schedule.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const int np = static_cast<int>(cfg.policies.size());
    const int reps = cfg.reps;
    ExperimentResult result;
    result.traces.resize(static_cast<std::size_t>(np) * reps);

    parallel_for(static_cast<std::size_t>(np) * reps, cfg.threads, [&](std::size_t task) {
        const int p = static_cast<int>(task) / reps;
        const int r = static_cast<int>(task) % reps;
        const std::uint64_t task_seed = mix_seed(mix_seed(cfg.base_seed, p), r);
        BanditEnv env(cfg.instance, cfg.horizon, mix_seed(task_seed, 0));
        auto policy = make_policy(cfg.policies[p], cfg.instance.actions, cfg.horizon,
                                  mix_seed(task_seed, 1));
        RegretTrace trace = policy_run(*policy, env, cfg.full_trace);
        trace.rep_id = r;
        result.traces[task] = std::move(trace);
    });

    const GapInfo gaps = compute_gaps(cfg.instance);
    double c_lb = std::numeric_limits<double>::quiet_NaN();
    try {
        c_lb = solve_allocation(cfg.instance.actions, gaps).value;
    } catch (const std::exception&) {
        // Reported as NaN; e.g. non-unique optimum instances have no constant.
    }

    for (int p = 0; p < np; ++p) {
        PolicySummary s;
        s.policy = result.traces[static_cast<std::size_t>(p) * reps].policy;
        s.n = cfg.horizon;
        s.reps = reps;
        s.c_lower_bound = c_lb;
        s.mean_pulls.assign(cfg.instance.actions.k, 0.0);
        double sum = 0.0, sumsq = 0.0;
        for (int r = 0; r < reps; ++r) {
            const RegretTrace& tr = result.traces[static_cast<std::size_t>(p) * reps + r];
            sum += tr.final_cum_regret;
            sumsq += tr.final_cum_regret * tr.final_cum_regret;
            for (int i = 0; i < cfg.instance.actions.k; ++i)
                s.mean_pulls[i] += static_cast<double>(tr.final_pulls[i]);
        }
        for (auto& m : s.mean_pulls) m /= reps;
        s.mean_final_regret = sum / reps;
        const double var =
            reps > 1 ? std::max(0.0, (sumsq - sum * sum / reps) / (reps - 1)) : 0.0;
        s.stderr_final_regret = reps > 1 ? std::sqrt(var / reps) : 0.0;
        s.regret_over_log_n = s.mean_final_regret / std::log(static_cast<double>(cfg.horizon));
        s.gram.reps = reps;
        s.gram.mean_final_gram = Mat::Zero(cfg.instance.actions.d, cfg.instance.actions.d);
        for (int i = 0; i < cfg.instance.actions.k; ++i) {
            const Vec& x = cfg.instance.actions.arms[i];
            s.gram.mean_final_gram.noalias() += s.mean_pulls[i] * (x * x.transpose());
        }
        result.summaries.push_back(std::move(s));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Exact divergence between the observation laws of one policy run against
/// parameters theta and theta': (1/2) sum_x E[T_x(n)] <x, theta - theta'>^2.
inline double kl_decomposition(const std::vector<double>& counts, const ActionSet& actions,
                               const Vec& theta, const Vec& theta_prime) {
    if (static_cast<int>(counts.size()) != actions.k)
        throw std::invalid_argument("kl_decomposition: one count per arm required");
    double kl = 0.0;
    for (int i = 0; i < actions.k; ++i) {
        const double inner = actions.arms[i].dot(theta - theta_prime);
        kl += 0.5 * counts[i] * inner * inner;
    }
    return kl;
}

struct DiagnosticRow {
    int arm = 0;
    double lhs = 0.0;    // log(n) ||x - x*||^2_{Gbar^-1}
    double bound = 0.0;  // Delta_x^2 / 2
    bool pass = false;
};

struct DiagnosticTable {
    bool gram_singular = false;
    double slack = 1.2;
    std::vector<DiagnosticRow> rows;

    bool all_pass() const {
        if (gram_singular) return false;
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

/// Checks the estimated mean Gram matrix against the asymptotic width
/// requirement log(n) ||x - x*||^2_{Gbar_n^-1} <= Delta_x^2 / 2, at a
/// multiplicative slack. A singular mean Gram matrix is itself a finding
/// (some direction was never explored).
inline DiagnosticTable lower_bound_diagnostic(const GramAverage& gram, const Instance& inst,
                                              std::int64_t n, double slack = 1.2) {
    DiagnosticTable table;
    table.slack = slack;
    const GapInfo gaps = compute_gaps(inst);
    Eigen::SelfAdjointEigenSolver<Mat> es(gram.mean_final_gram);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 1e-12 * lmax) {
        table.gram_singular = true;
        return table;
    }
    const int star = gaps.optimal_indices.front();
    const double logn = std::log(static_cast<double>(n));
    for (int i = 0; i < inst.actions.k; ++i) {
        if (gaps.gaps[i] <= 0.0) continue;
        DiagnosticRow row;
        row.arm = i;
        const Vec diff = inst.actions.arms[i] - inst.actions.arms[star];
        row.lhs = logn * quad_form_inv(gram.mean_final_gram, diff);
        row.bound = gaps.gaps[i] * gaps.gaps[i] / 2.0;
        row.pass = row.lhs <= slack * row.bound;
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Counter-example experiment

struct CounterexamplePolicyRow {
    std::string policy;
    double mean_final_regret = 0.0;
    double regret_over_log_n = 0.0;
    double mean_pulls_e2 = 0.0;
};

struct CounterexampleReport {
    double alpha = 1.0;
    double eps = 0.0;
    std::int64_t n = 0;
    int reps = 0;
    double c_lower_bound = 0.0;        // solver value; ~128 alpha^2 for small eps
    double optimism_pull_bound = 0.0;  // 2 + 4 alpha log n
    std::vector<CounterexamplePolicyRow> rows;
};

/// Runs ellipsoid optimism, Thompson sampling and the three-phase strategy
/// on the counterexample instance and reports regret and e2 pull counts
/// against the optimistic pull ceiling.
inline CounterexampleReport counterexample_report(double alpha, double eps, std::int64_t n,
                                                  int reps, std::uint64_t seed, int threads = 0) {
    ExperimentConfig cfg;
    cfg.instance = make_counterexample(alpha, eps);
    cfg.horizon = n;
    cfg.policies = {PolicyConfig{"oful", alpha, 1.0}, PolicyConfig{"lints", alpha, 1.0},
                    PolicyConfig{"optimal", 1.0, 1.0}};
    cfg.reps = reps;
    cfg.base_seed = seed;
    cfg.threads = threads;
    ExperimentResult res = run_experiment(cfg);

    CounterexampleReport report;
    report.alpha = alpha;
    report.eps = eps;
    report.n = n;
    report.reps = reps;
    report.c_lower_bound = res.summaries.front().c_lower_bound;
    report.optimism_pull_bound = 2.0 + 4.0 * alpha * std::log(static_cast<double>(n));
    for (const auto& s : res.summaries) {
        CounterexamplePolicyRow row;
        row.policy = s.policy;
        row.mean_final_regret = s.mean_final_regret;
        row.regret_over_log_n = s.regret_over_log_n;
        row.mean_pulls_e2 = s.mean_pulls[1];
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV output (shortest round-trip decimal formatting, schedule-independent
// row order, header always present)

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline void write_trace_csv(const std::vector<RegretTrace>& traces, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "rep_id,policy,t,arm_index,instant_regret,cum_regret\n";
    for (const auto& tr : traces)
        for (const auto& p : tr.points)
            out << tr.rep_id << ',' << tr.policy << ',' << p.t << ',' << p.arm << ','
                << format_double(p.instant_regret) << ',' << format_double(p.cum_regret) << '\n';
}

inline void write_summary_csv(const std::vector<PolicySummary>& summaries,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "policy,n,reps,mean_final_regret,stderr,regret_over_log_n,c_lower_bound\n";
    for (const auto& s : summaries)
        out << s.policy << ',' << s.n << ',' << s.reps << ',' << format_double(s.mean_final_regret)
            << ',' << format_double(s.stderr_final_regret) << ','
            << format_double(s.regret_over_log_n) << ',' << format_double(s.c_lower_bound)
            << '\n';
}

}  // namespace linbandit
