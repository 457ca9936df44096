// Command-line driver for safe BO experiments.
//
//   safebo run <config> [--out DIR] [--seed N] [--jobs K] [--no-plots]
//   safebo audit <config> [--out DIR] [--seed N] [--jobs K]
//   safebo replay <function-record> <config> [--out DIR] [--seed N] [--jobs K] [--no-plots]
//
// Exit codes: 0 success, 2 configuration error, 3 invariant failure.

#include "safebo/errors.hpp"
#include "safebo/harness/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace safebo;
using namespace safebo::harness;

struct CommonOptions {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool no_plots = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool plots) {
    cmd->add_option("config", o.config, "Experiment config file")->required();
    cmd->add_option("--out", o.out, "Output directory (default: config 'output')");
    cmd->add_option("--seed", o.seed, "Master seed override");
    cmd->add_option("--jobs", o.jobs, "Worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
    if (plots) cmd->add_flag("--no-plots", o.no_plots, "Skip SVG plots");
}

ExperimentConfig load(const CommonOptions& o) {
    auto cfg = parse_config(o.config);
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.out) cfg.output = *o.out;
    return cfg;
}

int jobs_of(const CommonOptions& o) {
    if (o.jobs > 0) return o.jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void print_comparison(const ExperimentConfig& cfg, const BatchResult& result) {
    for (const auto& a : cfg.algorithms) {
        std::cout << fmt::format("{:<20} violations {:>5}  mean simple regret at T={}: {:.6g}\n", a.name,
                                 result.summary.total_violations(a.name), cfg.budget,
                                 result.summary.mean_regret(a.name, cfg.budget));
    }
}

int run(const CommonOptions& o) {
    const auto cfg = load(o);
    if (cfg.kind == ExperimentKind::BoundAudit) throw ConfigError("bound_audit configs run with the 'audit' command");
    const auto result = run_experiment_batch(cfg, jobs_of(o));
    write_batch_outputs(cfg, result, cfg.output, !o.no_plots);
    print_comparison(cfg, result);
    std::cout << "wrote " << cfg.output << '\n';
    return 0;
}

int audit(const CommonOptions& o) {
    const auto cfg = load(o);
    if (cfg.kind != ExperimentKind::BoundAudit) throw ConfigError("the 'audit' command needs kind = bound_audit");
    const auto result = bound_audit(cfg, jobs_of(o));
    write_audit_outputs(cfg, result, cfg.output);
    for (const auto& s : result.schedules) {
        std::cout << fmt::format("{:<16} runs {:>4}  runs with violation {:>4} ({:.4f})  mean violating fraction {:.4g}  mean beta {:.4g}\n",
                                 s.schedule, s.runs, s.runs_with_violation, s.violation_run_frequency,
                                 s.mean_violation_fraction, s.mean_beta);
    }
    std::cout << "wrote " << cfg.output << '\n';
    return 0;
}

int replay(const std::string& record, const CommonOptions& o) {
    auto cfg = load(o);
    if (cfg.kind == ExperimentKind::BoundAudit) throw ConfigError("replay needs a comparison or los_gp_ucb_bench config");
    std::ifstream in(record);
    if (!in) throw ConfigError("cannot open function record '" + record + "'");
    RkhsFunction f = [&] {
        try {
            return read_function_record(in);
        } catch (const ArgumentError& e) {
            throw ConfigError(record + ": " + e.what());
        }
    }();
    cfg.num_functions = 1;
    std::vector<ProblemInstance> problems{make_problem_from_function(cfg, std::move(f), 0)};
    const auto result = run_experiment_batch(cfg, std::move(problems), jobs_of(o));
    write_batch_outputs(cfg, result, cfg.output, !o.no_plots);
    print_comparison(cfg, result);
    std::cout << "wrote " << cfg.output << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safe Bayesian optimization experiments (SafeOpt, Real-beta-SafeOpt, LoSBO, LoS-GP-UCB)"};
    app.require_subcommand(1);

    CommonOptions run_opts, audit_opts, replay_opts;
    std::string record;
    auto* run_cmd = app.add_subcommand("run", "Run an optimization experiment batch");
    add_common(run_cmd, run_opts, true);
    auto* audit_cmd = app.add_subcommand("audit", "Measure confidence-bound violations");
    add_common(audit_cmd, audit_opts, false);
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a config on a saved function record");
    replay_cmd->add_option("function-record", record, "Function record file")->required();
    add_common(replay_cmd, replay_opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) return run(run_opts);
        if (*audit_cmd) return audit(audit_opts);
        if (*replay_cmd) return replay(record, replay_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "invariant failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
