// Command-line front end for the linear bandit laboratory.
//
// Subcommands:
//   solve <instance.json>            allocation weights and the constant c(A,theta)
//   spanner <instance.json>          barycentric spanner and coefficient check
//   simulate <experiment.json>       Monte Carlo run, CSV trace + summary
//   counterexample                   optimism/Thompson/three-phase comparison
//   verify-conc <instance.json>      deviation-bound violation rate as CSV rows
//   diagnose-lb <experiment.json>    mean-Gram width diagnostic per policy
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure.

#include <cinttypes>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "linbandit/linbandit.hpp"

namespace lb = linbandit;

namespace {

void print_allocation(const lb::Instance& inst, const lb::Allocation& alloc,
                      const std::string& csv_path) {
    const lb::GapInfo gaps = lb::compute_gaps(inst);
    std::printf("c(A,theta) = %.10g\n", alloc.value);
    std::printf("optimal arm index = %d (weight capped at %.3g)\n", alloc.optimal_arm,
                alloc.cap_used);
    std::printf("%-6s %-14s %-14s %-16s\n", "arm", "gap", "weight", "residual");
    for (int i = 0; i < inst.actions.k; ++i) {
        if (i == alloc.optimal_arm)
            std::printf("%-6d %-14.6g %-14s %-16s\n", i, gaps.gaps[i], "unbounded", "-");
        else
            std::printf("%-6d %-14.6g %-14.8g %-16.3e\n", i, gaps.gaps[i], alloc.weights[i],
                        alloc.residuals[i]);
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw lb::ConfigError("cannot open output file '" + csv_path + "'");
        out << "arm,gap,weight,residual,unbounded\n";
        for (int i = 0; i < inst.actions.k; ++i)
            out << i << ',' << lb::format_double(gaps.gaps[i]) << ','
                << lb::format_double(alloc.weights[i]) << ','
                << lb::format_double(alloc.residuals[i]) << ','
                << (i == alloc.optimal_arm ? 1 : 0) << '\n';
        std::printf("wrote %s\n", csv_path.c_str());
    }
}

int run(int argc, char** argv) {
    CLI::App app{"linear bandit laboratory"};
    app.require_subcommand(1);

    std::string instance_path, experiment_path, csv_path, out_path;
    double spanner_c = 1.0;
    double alpha = 1.0, eps = 0.01, delta = 0.1, c_univ = 1.0;
    std::int64_t horizon = 1000000;
    int reps = 20;
    std::uint64_t seed = 1;
    int threads = 0;

    auto* solve = app.add_subcommand("solve", "solve the allocation program for an instance");
    solve->add_option("instance", instance_path, "instance JSON file")->required();
    solve->add_option("--csv", csv_path, "also write the table as CSV");

    auto* spanner = app.add_subcommand("spanner", "compute a barycentric spanner");
    spanner->add_option("instance", instance_path, "instance JSON file")->required();
    spanner->add_option("--c", spanner_c, "approximation factor C >= 1");

    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment");
    simulate->add_option("experiment", experiment_path, "experiment JSON file")->required();
    simulate->add_option("--threads", threads, "worker threads (0 = auto)");

    auto* ce = app.add_subcommand("counterexample", "regret comparison on the counterexample");
    ce->add_option("--alpha", alpha, "construction/confidence scale")->required();
    ce->add_option("--eps", eps, "gap of the nearly-optimal arm")->required();
    ce->add_option("--n", horizon, "horizon")->required();
    ce->add_option("--reps", reps, "replications")->required();
    ce->add_option("--seed", seed, "base seed")->required();
    ce->add_option("--threads", threads, "worker threads (0 = auto)");

    auto* vc = app.add_subcommand("verify-conc", "estimate the deviation-bound violation rate");
    vc->add_option("instance", instance_path, "instance JSON file")->required();
    vc->add_option("--delta", delta, "confidence level in [1/n, 1)")->required();
    vc->add_option("--n", horizon, "rounds per replication")->required();
    vc->add_option("--reps", reps, "replications")->required();
    vc->add_option("--seed", seed, "base seed");
    vc->add_option("--c-univ", c_univ, "universal constant in the threshold");
    vc->add_option("--out", out_path, "write (delta, rate, reps) CSV here");
    vc->add_option("--threads", threads, "worker threads (0 = auto)");

    auto* diag = app.add_subcommand("diagnose-lb", "mean-Gram width diagnostic per policy");
    diag->add_option("experiment", experiment_path, "experiment JSON file")->required();
    diag->add_option("--threads", threads, "worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        lb::Instance inst = lb::load_instance(instance_path);
        print_allocation(inst, lb::solve_allocation(inst.actions, lb::compute_gaps(inst)),
                         csv_path);
        return 0;
    }

    if (spanner->parsed()) {
        lb::Instance inst = lb::load_instance(instance_path);
        lb::Spanner sp = lb::barycentric_spanner(inst.actions, spanner_c);
        std::printf("spanner arms (C = %g):", spanner_c);
        for (int i : sp.indices) std::printf(" %d", i);
        std::printf("\n%-6s %-40s %-10s\n", "arm", "coefficients", "max|coef|");
        for (int i = 0; i < inst.actions.k; ++i) {
            lb::Vec coef = lb::spanner_coefficients(inst.actions.arms[i], sp, inst.actions);
            std::string cs;
            for (int c = 0; c < coef.size(); ++c)
                cs += (c ? " " : "") + lb::format_double(coef[c]);
            std::printf("%-6d %-40s %-10.6g\n", i, cs.c_str(), coef.cwiseAbs().maxCoeff());
        }
        return 0;
    }

    if (simulate->parsed()) {
        lb::ExperimentConfig cfg = lb::load_experiment(experiment_path);
        if (threads > 0) cfg.threads = threads;
        lb::ExperimentResult res = lb::run_experiment(cfg);
        for (const auto& s : res.summaries)
            std::printf("%-10s n=%" PRId64 " reps=%d mean_regret=%.6g stderr=%.3g "
                        "regret/log(n)=%.6g c=%.6g\n",
                        s.policy.c_str(), s.n, s.reps, s.mean_final_regret,
                        s.stderr_final_regret, s.regret_over_log_n, s.c_lower_bound);
        if (!cfg.trace_path.empty()) {
            lb::write_trace_csv(res.traces, cfg.trace_path);
            std::printf("wrote %s\n", cfg.trace_path.c_str());
        }
        if (!cfg.summary_path.empty()) {
            lb::write_summary_csv(res.summaries, cfg.summary_path);
            std::printf("wrote %s\n", cfg.summary_path.c_str());
        }
        return 0;
    }

    if (ce->parsed()) {
        lb::CounterexampleReport rep =
            lb::counterexample_report(alpha, eps, horizon, reps, seed, threads);
        std::printf("c(A,theta) = %.6g  (128 alpha^2 = %.6g for small eps)\n",
                    rep.c_lower_bound, 128.0 * alpha * alpha);
        std::printf("optimistic e2 pull ceiling 2 + 4 alpha log n = %.4g\n",
                    rep.optimism_pull_bound);
        std::printf("%-10s %-16s %-16s %-14s\n", "policy", "mean_regret", "regret/log(n)",
                    "mean_T_e2");
        for (const auto& row : rep.rows)
            std::printf("%-10s %-16.6g %-16.6g %-14.6g\n", row.policy.c_str(),
                        row.mean_final_regret, row.regret_over_log_n, row.mean_pulls_e2);
        return 0;
    }

    if (vc->parsed()) {
        lb::Instance inst = lb::load_instance(instance_path);
        lb::Spanner sp = lb::barycentric_spanner(inst.actions, 1.0);
        lb::ViolationOptions opts;
        opts.c_univ = c_univ;
        opts.threads = threads;
        const double rate =
            lb::empirical_violation_rate(inst, sp.indices, horizon, delta, reps, seed, opts);
        std::printf("delta=%g rate=%g reps=%d\n", delta, rate, reps);
        if (!out_path.empty()) {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw lb::ConfigError("cannot open output file '" + out_path + "'");
            out << "delta,rate,reps\n"
                << lb::format_double(delta) << ',' << lb::format_double(rate) << ',' << reps
                << '\n';
            std::printf("wrote %s\n", out_path.c_str());
        }
        return 0;
    }

    if (diag->parsed()) {
        lb::ExperimentConfig cfg = lb::load_experiment(experiment_path);
        if (threads > 0) cfg.threads = threads;
        lb::ExperimentResult res = lb::run_experiment(cfg);
        for (const auto& s : res.summaries) {
            lb::DiagnosticTable table =
                lb::lower_bound_diagnostic(s.gram, cfg.instance, cfg.horizon);
            std::printf("policy %s:\n", s.policy.c_str());
            if (table.gram_singular) {
                std::printf("  mean Gram matrix is singular: some direction was never "
                            "explored (linear regret on some instance)\n");
                continue;
            }
            std::printf("  %-6s %-16s %-16s %-6s\n", "arm", "log(n)*width^2", "gap^2/2",
                        "pass");
            for (const auto& row : table.rows)
                std::printf("  %-6d %-16.6g %-16.6g %-6s\n", row.arm, row.lhs, row.bound,
                            row.pass ? "yes" : "NO");
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const lb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
