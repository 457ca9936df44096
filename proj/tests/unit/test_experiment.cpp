#include "safebo/harness/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace safebo;
using namespace safebo::harness;

namespace {

ExperimentConfig small_comparison(int functions, int seeds, int budget) {
    auto cfg = parse_config_text(R"(
[experiment]
kind = safeopt_comparison
master_seed = 5
[grid]
points = 100
[function]
lipschitz_resolution = 2000
[algorithm.safeopt]
variant = safeopt
beta = 2
[algorithm.losbo]
variant = losbo
beta = 2
)");
    cfg.num_functions = functions;
    cfg.num_seeds = seeds;
    cfg.budget = budget;
    return cfg;
}

ExperimentConfig small_ucb_bench(int functions, int seeds, int budget) {
    auto cfg = parse_config_text(R"(
[experiment]
kind = los_gp_ucb_bench
master_seed = 6
[grid]
points = 30
[function]
dimension = 2
lower = 0, 0
upper = 1, 1
lengthscale = 0.2
lipschitz_resolution = 300
[algorithm.ucb]
variant = los_gp_ucb
beta = 2
num_starts = 6
max_iters = 30
)");
    cfg.num_functions = functions;
    cfg.num_seeds = seeds;
    cfg.budget = budget;
    return cfg;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("problem instances are well-formed") {
    const auto cfg = small_comparison(4, 1, 5);
    for (int f = 0; f < 4; ++f) {
        const auto p = make_problem(cfg, f);
        CHECK(p.function_id == f);
        CHECK(std::abs(rkhs_norm(p.truth) - 2.0) < 1e-10);
        CHECK(p.f_min <= p.h);
        CHECK(p.h <= p.safe_optimum);
        CHECK(p.safe_optimum == p.f_max);
        REQUIRE(p.problem.seed_indices.size() == 1);
        const double seed_value = p.truth((*p.problem.grid)[p.problem.seed_indices[0]]);
        CHECK(seed_value >= p.h + 2 * cfg.noise.scale);
        CHECK(p.lipschitz > 0.0);
        // Same inputs give the same instance.
        CHECK(make_problem(cfg, f).truth.coefficients() == p.truth.coefficients());
    }
}

TEST_CASE("misspecified functions have the scaled true norm") {
    auto cfg = small_comparison(1, 1, 5);
    cfg.function.misspecification = 4.0;
    CHECK(std::abs(rkhs_norm(make_problem(cfg, 0).truth) - 8.0) < 1e-9);
}

TEST_CASE("raw CSV row count and determinism") {
    auto one = small_comparison(1, 1, 5);
    one.algorithms.resize(1);
    const auto r1 = run_experiment_batch(one, 1);
    CHECK(line_count(traces_csv(r1.traces)) == 1 + 5);

    const auto cfg = small_comparison(2, 2, 6);
    const auto a = run_experiment_batch(cfg, 1);
    const auto b = run_experiment_batch(cfg, 1);
    const auto c = run_experiment_batch(cfg, 3);
    CHECK(line_count(traces_csv(a.traces)) == 1 + 2 * 2 * 2 * 6);
    CHECK(traces_csv(a.traces) == traces_csv(b.traces));
    CHECK(traces_csv(a.traces) == traces_csv(c.traces));
    CHECK(aggregate_csv(a.summary) == aggregate_csv(c.summary));
    for (std::size_t i = 0; i < a.traces.size(); ++i) CHECK(a.traces[i].run_id == static_cast<int>(i));
    CHECK(a.summary.total_violations("losbo") == 0);
}

TEST_CASE("LoS-GP-UCB bench in 2-D is deterministic and safe") {
    const auto cfg = small_ucb_bench(2, 2, 8);
    const auto a = run_experiment_batch(cfg, 1);
    const auto b = run_experiment_batch(cfg, 2);
    CHECK(line_count(traces_csv(a.traces)) == 1 + 2 * 2 * 8);
    CHECK(traces_csv(a.traces) == traces_csv(b.traces));
    CHECK(a.summary.total_violations("ucb") == 0);
    for (const auto& tr : a.traces)
        for (const auto& r : tr.records) CHECK(r.safe_set_size == -1);
}

TEST_CASE("CSV headers") {
    auto cfg = small_comparison(1, 1, 2);
    cfg.algorithms.resize(1);
    const auto r = run_experiment_batch(cfg, 1);
    const auto raw = traces_csv(r.traces);
    CHECK(raw.substr(0, raw.find('\n')) ==
          "run_id,algorithm,function_id,seed,t,x,y_noisy,f_true,safe_actual,safe_set_size,beta_t,acquisition_value");
    const auto agg = aggregate_csv(r.summary);
    CHECK(agg.substr(0, agg.find('\n')) ==
          "algorithm,function_id,t,mean_simple_regret,std_simple_regret,total_violations,runs");
    CHECK(agg.find("safeopt,ALL,2,") != std::string::npos);
}

TEST_CASE("outputs are written to disk") {
    const auto dir = std::filesystem::temp_directory_path() / "safebo_test_outputs";
    std::filesystem::remove_all(dir);
    auto cfg = small_comparison(1, 2, 4);
    const auto r = run_experiment_batch(cfg, 1);
    write_batch_outputs(cfg, r, dir, true);
    for (const char* f : {"traces.csv", "aggregate.csv", "metadata.txt", "regret.svg", "violations.svg",
                          "diagnostic.svg", "functions/function_0000.txt"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
    CHECK(slurp(dir / "traces.csv") == traces_csv(r.traces));
    CHECK(slurp(dir / "metadata.txt").find("1.1") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_for covers every index and reports the first failure") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if (i == 17 || i == 40) throw std::runtime_error("fail " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "fail 17");
    }
}

TEST_CASE("bound audit") {
    auto cfg = parse_config_text(R"(
[experiment]
kind = bound_audit
num_functions = 3
num_seeds = 2
[function]
lipschitz_resolution = 2000
[audit]
data_points = 10
grid_points = 300
[schedule.huge]
beta = 1000000
[schedule.tiny]
beta = 0.01
[schedule.real]
beta = rkhs
)");
    const auto r = bound_audit(cfg, 2);
    CHECK(r.runs.size() == 3 * 2 * 3);
    CHECK(r.schedule("huge").runs_with_violation == 0);
    CHECK(r.schedule("huge").mean_violation_fraction == 0.0);
    CHECK(r.schedule("tiny").runs_with_violation == 6);
    CHECK(r.schedule("tiny").violation_run_frequency == 1.0);
    CHECK(r.schedule("real").mean_beta > 2.0);
    CHECK_THROWS_AS(r.schedule("nope"), std::out_of_range);
    CHECK(audit_csv(bound_audit(cfg, 1)) == audit_csv(r));
    CHECK(line_count(audit_aggregate_csv(r)) == 4);
}
