#include "safebo/harness/experiment.hpp"

#include "safebo/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace safebo::harness {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kFunctionStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kAlgorithmStream = 3;
constexpr std::uint64_t kAuditStream = 4;

constexpr int kMaxFunctionDraws = 100;

std::string fmt_real(double v) { return fmt::format("{:.17g}", v); }

std::string join_point(const Point& x) {
    std::string s;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ";" : "") + fmt_real(x[i]);
    return s;
}

std::shared_ptr<const GridDomain> experiment_grid(const ExperimentConfig& config) {
    return std::make_shared<const GridDomain>(config.function.box(), config.grid_counts());
}

/// Fills h, S0 and the references; returns false when no seed point qualifies.
bool derive_references(const ExperimentConfig& config, ProblemInstance& p, std::shared_ptr<const GridDomain> grid,
                       Rng& rng) {
    const auto& pts = grid->points();
    std::vector<double> values(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) values[i] = p.truth(pts[i]);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    p.f_min = sorted.front();
    p.f_max = sorted.back();
    const auto q = static_cast<std::size_t>(std::floor(config.function.safe_quantile * static_cast<double>(sorted.size() - 1)));
    p.h = sorted[q];
    if (p.f_max < p.h) return false;

    const double margin = 2.0 * config.noise.scale + config.function.seed_margin * (p.f_max - p.f_min);
    std::vector<std::size_t> candidates;
    p.safe_optimum = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= p.h) p.safe_optimum = std::max(p.safe_optimum, values[i]);
        if (values[i] >= p.h + margin) candidates.push_back(i);
    }
    if (candidates.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t seed = candidates[pick(rng)];

    p.problem.box = config.function.box();
    p.problem.grid = std::move(grid);
    p.problem.seed_indices = {seed};
    p.problem.seed_points = {pts[seed]};
    return true;
}

ProblemInstance placeholder_problem(const ExperimentConfig& config) {
    return ProblemInstance(0, RkhsFunction(config.function.kernel, {Point::Zero(config.function.dimension)}, {0.0}));
}

}  // namespace

ProblemInstance make_problem(const ExperimentConfig& config, int function_id) {
    const auto grid = experiment_grid(config);
    const Box box = config.function.box();
    const double true_norm = config.function.misspecification * config.function.rkhs_norm;
    Rng rng(derive_seed(config.master_seed, kFunctionStream, static_cast<std::uint64_t>(function_id)));
    for (int attempt = 0; attempt < kMaxFunctionDraws; ++attempt) {
        ProblemInstance p(function_id,
                          sample_rkhs_function(config.function.kernel, box, config.function.centers, true_norm, rng()));
        p.true_norm = true_norm;
        if (!derive_references(config, p, grid, rng)) continue;
        p.lipschitz = lipschitz_oracle(p.truth, box, config.function.lipschitz_resolution);
        return p;
    }
    throw InvariantError(fmt::format("function {}: no draw in {} attempts has a qualifying seed point", function_id,
                                     kMaxFunctionDraws));
}

ProblemInstance make_problem_from_function(const ExperimentConfig& config, RkhsFunction truth, int function_id) {
    if (truth.dim() != config.function.dimension) throw ConfigError("function record dimension does not match config");
    Rng rng(derive_seed(config.master_seed, kFunctionStream, static_cast<std::uint64_t>(function_id)));
    ProblemInstance p(function_id, std::move(truth));
    p.true_norm = rkhs_norm(p.truth);
    if (!derive_references(config, p, experiment_grid(config), rng)) {
        throw InvariantError("replayed function has no qualifying seed point");
    }
    p.lipschitz = lipschitz_oracle(p.truth, config.function.box(), config.function.lipschitz_resolution);
    return p;
}

AlgorithmConfig algorithm_config(const ExperimentConfig& config, const AlgorithmParams& params,
                                 const ProblemInstance& problem, std::uint64_t rng_seed) {
    AlgorithmConfig a;
    a.variant = params.variant;
    a.kernel = config.function.kernel;
    a.lambda = params.lambda;
    a.schedule = params.schedule.resolve(config.function, config.noise);
    a.safety = LipschitzSafetyModel(params.lipschitz.value_or(problem.lipschitz),
                                    params.noise_bound.value_or(config.noise.scale));
    a.h = problem.h;
    a.budget = config.budget;
    a.multistart = params.multistart;
    a.seed_radius = params.seed_radius;
    a.rng_seed = rng_seed;
    return a;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

namespace {

void check_run(const ExperimentConfig& config, const AlgorithmParams& params, const AlgorithmConfig& alg,
               const ProblemInstance& problem, const RunTrace& trace) {
    auto fail = [&](const std::string& what) {
        throw InvariantError(fmt::format("algorithm {}, function {}, seed {}: {}", trace.algorithm, trace.function_id,
                                         trace.seed, what));
    };
    long long prev_size = 0;
    for (const auto& r : trace.records) {
        if (r.safe_set_size >= 0) {
            if (r.safe_set_size < prev_size) fail(fmt::format("safe set shrank at t={}", r.t));
            prev_size = r.safe_set_size;
        }
    }
    // Lipschitz-certified variants are safe whenever L and E are valid.
    const bool certified = uses_lipschitz_safety(params.variant) && config.noise.kind == NoiseParams::Kind::Uniform &&
                           alg.safety.E >= config.noise.scale && alg.safety.L >= problem.lipschitz;
    if (config.assert_safety && certified) {
        for (const auto& r : trace.records) {
            if (!r.safe_actual) fail(fmt::format("unsafe query at t={} (f={}, h={})", r.t, r.f_true, alg.h));
        }
    }
    if (params.variant == AlgorithmVariant::LoSGpUcb) {
        // Re-check each query against the envelope of the data available when it was chosen.
        ContinuousSafeRegion region{problem.problem.seed_points, alg.seed_radius, alg.safety, alg.h};
        Dataset data(problem.problem.box);
        for (const auto& r : trace.records) {
            if (!region.contains(data, r.x)) fail(fmt::format("query at t={} fails the envelope re-check", r.t));
            data.append(r.x, r.y_noisy);
        }
    }
}

}  // namespace

BatchResult run_experiment_batch(const ExperimentConfig& config, int jobs) {
    std::vector<ProblemInstance> problems(static_cast<std::size_t>(config.num_functions),
                                          placeholder_problem(config));
    parallel_for(problems.size(), jobs, [&](std::size_t i) { problems[i] = make_problem(config, static_cast<int>(i)); });
    return run_experiment_batch(config, std::move(problems), jobs);
}

BatchResult run_experiment_batch(const ExperimentConfig& config, std::vector<ProblemInstance> problems, int jobs) {
    if (config.kind == ExperimentKind::BoundAudit) throw ConfigError("bound_audit experiments run through bound_audit()");
    BatchResult result;
    result.problems = std::move(problems);
    const auto nf = result.problems.size();
    const auto ns = static_cast<std::size_t>(config.num_seeds);
    const auto na = config.algorithms.size();
    result.traces.resize(na * nf * ns);

    for (const auto& p : result.problems) {
        for (auto s : p.problem.seed_indices) {
            if (p.truth((*p.problem.grid)[s]) < p.h) {
                throw InvariantError(fmt::format("function {}: seed point is not actually safe", p.function_id));
            }
        }
    }

    parallel_for(result.traces.size(), jobs, [&](std::size_t run_id) {
        const std::size_t a = run_id / (nf * ns);
        const std::size_t f = (run_id / ns) % nf;
        const std::size_t s = run_id % ns;
        const auto& params = config.algorithms[a];
        const auto& problem = result.problems[f];
        const auto alg = algorithm_config(config, params, problem,
                                          derive_seed(config.master_seed, kAlgorithmStream, run_id));
        // Same noise stream for every algorithm on a (function, seed) pair.
        NoiseStream noise(config.noise.model(), derive_seed(config.master_seed, kNoiseStream, f * ns + s));
        auto oracle = [&](const Point& x) { return noisy_eval(problem.truth, noise, x); };
        auto truth = [&](const Point& x) { return problem.truth(x); };

        RunTrace trace;
        trace.run_id = static_cast<int>(run_id);
        trace.algorithm = params.name;
        trace.function_id = problem.function_id;
        trace.seed = static_cast<int>(s);
        trace.h = problem.h;
        trace.safe_optimum = problem.safe_optimum;
        try {
            trace.records = run_optimization(alg, problem.problem, oracle, truth);
        } catch (const std::exception& e) {
            throw InvariantError(fmt::format("algorithm {}, function {}, seed {}: {}", params.name, problem.function_id,
                                             s, e.what()));
        }
        check_run(config, params, alg, problem, trace);
        result.traces[run_id] = std::move(trace);
    });
    result.summary = compute_metrics(result.traces);
    return result;
}

std::string traces_csv(const std::vector<RunTrace>& traces) {
    std::string out =
        "run_id,algorithm,function_id,seed,t,x,y_noisy,f_true,safe_actual,safe_set_size,beta_t,acquisition_value\n";
    for (const auto& tr : traces) {
        for (const auto& r : tr.records) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", tr.run_id, tr.algorithm, tr.function_id, tr.seed,
                               r.t, join_point(r.x), fmt_real(r.y_noisy), fmt_real(r.f_true), r.safe_actual ? 1 : 0,
                               r.safe_set_size, fmt_real(r.beta), fmt_real(r.acquisition_value));
        }
    }
    return out;
}

std::string aggregate_csv(const MetricsSummary& summary) {
    std::string out = "algorithm,function_id,t,mean_simple_regret,std_simple_regret,total_violations,runs\n";
    for (const auto& row : summary.aggregates) {
        out += fmt::format("{},{},{},{},{},{},{}\n", row.algorithm,
                           row.function_id == kAllFunctions ? std::string("ALL") : std::to_string(row.function_id),
                           row.t, fmt_real(row.mean_simple_regret), fmt_real(row.std_simple_regret),
                           row.total_violations, row.runs);
    }
    return out;
}

std::optional<DiagnosticData> diagnostic_for(const ExperimentConfig& config, const BatchResult& result) {
    if (config.function.dimension != 1 || result.traces.empty()) return std::nullopt;
    const auto it = std::find_if(config.algorithms.begin(), config.algorithms.end(), [](const AlgorithmParams& a) {
        return uses_lipschitz_safety(a.variant);
    });
    if (it == config.algorithms.end()) return std::nullopt;
    const auto a = static_cast<std::size_t>(it - config.algorithms.begin());
    const std::size_t runs_per_alg = result.problems.size() * static_cast<std::size_t>(config.num_seeds);
    const RunTrace& trace = result.traces[a * runs_per_alg];
    const ProblemInstance& problem = result.problems.front();
    const auto alg = algorithm_config(config, *it, problem, 0);

    Dataset data(problem.problem.box);
    for (const auto& r : trace.records) data.append(r.x, r.y_noisy);
    const GpPosterior post(alg.kernel, data, alg.lambda);
    const double beta = beta_value(alg.schedule, post);
    const GridDomain& grid = *problem.problem.grid;
    const auto state = update_safe_set_lipschitz(DiscreteSafeSet(problem.problem.grid, problem.problem.seed_indices, alg.h),
                                                 data, alg.safety);

    DiagnosticData d;
    d.title = fmt::format("{}: function {}, seed {}, t = {}", trace.algorithm, trace.function_id, trace.seed,
                          trace.records.size());
    d.h = alg.h;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point& x = grid[i];
        const auto p = post.predict(x);
        d.x.push_back(x[0]);
        d.truth.push_back(problem.truth(x));
        d.mean.push_back(p.mean);
        d.lower.push_back(p.mean - beta * p.std);
        d.upper.push_back(p.mean + beta * p.std);
        d.envelope.push_back(lipschitz_lower_envelope(data, alg.safety, x));
        d.safe.push_back(state.is_safe(i) ? 1 : 0);
    }
    for (const auto& r : trace.records) {
        d.obs_x.push_back(r.x[0]);
        d.obs_y.push_back(r.y_noisy);
    }
    return d;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
}

void write_problems(const ExperimentConfig& config, const std::vector<ProblemInstance>& problems,
                    const std::filesystem::path& out) {
    std::filesystem::create_directories(out / "functions");
    std::string meta = fmt::format("lipschitz_safety_factor = {:.17g}\n", kLipschitzSafetyFactor);
    meta += "function_id,true_norm,h,lipschitz,safe_optimum,f_min,f_max,seed_point\n";
    for (const auto& p : problems) {
        meta += fmt::format("{},{},{},{},{},{},{},{}\n", p.function_id, fmt_real(p.true_norm), fmt_real(p.h),
                            fmt_real(p.lipschitz), fmt_real(p.safe_optimum), fmt_real(p.f_min), fmt_real(p.f_max),
                            join_point(p.problem.seed_points.front()));
        write_file(out / "functions" / fmt::format("function_{:04d}.txt", p.function_id), function_record(p.truth));
    }
    meta += "\n# normalized config\n" + dump_config(config);
    write_file(out / "metadata.txt", meta);
}

}  // namespace

void write_batch_outputs(const ExperimentConfig& config, const BatchResult& result, const std::filesystem::path& out,
                         bool plots) {
    std::filesystem::create_directories(out);
    write_file(out / "traces.csv", traces_csv(result.traces));
    write_file(out / "aggregate.csv", aggregate_csv(result.summary));
    write_problems(config, result.problems, out);
    if (plots) render_plots(result.summary, result.traces, out, diagnostic_for(config, result));
}

const AuditScheduleSummary& AuditResult::schedule(const std::string& name) const {
    for (const auto& s : schedules) {
        if (s.schedule == name) return s;
    }
    throw std::out_of_range("no audit schedule named '" + name + "'");
}

AuditResult bound_audit(const ExperimentConfig& config, int jobs) {
    if (config.kind != ExperimentKind::BoundAudit) throw ConfigError("bound_audit needs an experiment of kind bound_audit");
    AuditResult result;
    const auto nf = static_cast<std::size_t>(config.num_functions);
    const auto ns = static_cast<std::size_t>(config.num_seeds);
    const auto nsched = config.audit.schedules.size();
    const Box box = config.function.box();

    result.problems.assign(nf, placeholder_problem(config));
    parallel_for(nf, jobs, [&](std::size_t i) { result.problems[i] = make_problem(config, static_cast<int>(i)); });

    const GridDomain fine(box, std::vector<int>(static_cast<std::size_t>(config.function.dimension), config.audit.grid_points));
    result.runs.resize(nf * ns * nsched);
    parallel_for(nf * ns, jobs, [&](std::size_t k) {
        const std::size_t f = k / ns, s = k % ns;
        const auto& problem = result.problems[f];
        Rng rng(derive_seed(config.master_seed, kAuditStream, k));
        NoiseStream noise(config.noise.model(), derive_seed(config.master_seed, kNoiseStream, k));
        Dataset data(box);
        for (int i = 0; i < config.audit.data_points; ++i) {
            const Point x = sample_uniform(box, rng);
            data.append(x, noisy_eval(problem.truth, noise, x));
        }
        const GpPosterior post(config.function.kernel, data, config.audit.lambda);
        std::vector<Prediction> preds;
        std::vector<double> truth;
        for (const auto& x : fine.points()) {
            preds.push_back(post.predict(x));
            truth.push_back(problem.truth(x));
        }
        for (std::size_t j = 0; j < nsched; ++j) {
            const auto& sp = config.audit.schedules[j];
            AuditRun run;
            run.schedule = sp.name;
            run.function_id = problem.function_id;
            run.seed = static_cast<int>(s);
            run.data_points = config.audit.data_points;
            run.beta = beta_value(sp.resolve(config.function, config.noise), post);
            std::size_t bad = 0;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                if (std::abs(truth[i] - preds[i].mean) > run.beta * preds[i].std) ++bad;
            }
            run.violation_fraction = static_cast<double>(bad) / static_cast<double>(preds.size());
            run.any_violation = bad > 0;
            result.runs[k * nsched + j] = std::move(run);
        }
    });

    for (const auto& sp : config.audit.schedules) {
        AuditScheduleSummary sum;
        sum.schedule = sp.name;
        std::vector<double> fractions;
        double beta_total = 0.0;
        for (const auto& r : result.runs) {
            if (r.schedule != sp.name) continue;
            ++sum.runs;
            if (r.any_violation) ++sum.runs_with_violation;
            fractions.push_back(r.violation_fraction);
            beta_total += r.beta;
        }
        sum.violation_run_frequency = static_cast<double>(sum.runs_with_violation) / sum.runs;
        double mean = 0.0;
        for (double v : fractions) mean += v;
        mean /= static_cast<double>(fractions.size());
        double var = 0.0;
        for (double v : fractions) var += (v - mean) * (v - mean);
        sum.mean_violation_fraction = mean;
        sum.std_violation_fraction = std::sqrt(var / static_cast<double>(fractions.size()));
        sum.mean_beta = beta_total / sum.runs;
        result.schedules.push_back(std::move(sum));
    }
    return result;
}

std::string audit_csv(const AuditResult& result) {
    std::string out = "schedule,function_id,seed,data_points,beta_t,violation_fraction,any_violation\n";
    for (const auto& r : result.runs) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.schedule, r.function_id, r.seed, r.data_points, fmt_real(r.beta),
                           fmt_real(r.violation_fraction), r.any_violation ? 1 : 0);
    }
    return out;
}

std::string audit_aggregate_csv(const AuditResult& result) {
    std::string out =
        "schedule,runs,runs_with_violation,violation_run_frequency,mean_violation_fraction,std_violation_fraction,mean_beta\n";
    for (const auto& s : result.schedules) {
        out += fmt::format("{},{},{},{},{},{},{}\n", s.schedule, s.runs, s.runs_with_violation,
                           fmt_real(s.violation_run_frequency), fmt_real(s.mean_violation_fraction),
                           fmt_real(s.std_violation_fraction), fmt_real(s.mean_beta));
    }
    return out;
}

void write_audit_outputs(const ExperimentConfig& config, const AuditResult& result, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    write_file(out / "audit.csv", audit_csv(result));
    write_file(out / "audit_aggregate.csv", audit_aggregate_csv(result));
    write_problems(config, result.problems, out);
}

}  // namespace safebo::harness
