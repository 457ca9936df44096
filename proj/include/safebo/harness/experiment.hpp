#pragma once

#include "safebo/harness/config.hpp"
#include "safebo/harness/metrics.hpp"
#include "safebo/harness/plots.hpp"
#include "safebo/synth.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace safebo::harness {

/// A run broke a safety or consistency invariant (CLI exit code 3).
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ground-truth problem derived from one sampled function.
struct ProblemInstance {
    ProblemInstance(int id, RkhsFunction f) : function_id(id), truth(std::move(f)) {}

    int function_id = 0;
    RkhsFunction truth;
    double true_norm = 0.0;
    double h = 0.0;
    /// Oracle estimate (finite differences times kLipschitzSafetyFactor).
    double lipschitz = 0.0;
    double safe_optimum = 0.0;
    double f_min = 0.0;
    double f_max = 0.0;
    /// The experiment grid doubles as the reference grid for h, S0 and regret.
    SafeProblem problem;
};

/// Samples function `function_id` at true norm misspecification * rkhs_norm and
/// derives h, S0, the safe optimum and the Lipschitz oracle. Functions
/// without a qualifying seed point are redrawn.
ProblemInstance make_problem(const ExperimentConfig& config, int function_id);

/// Same derivation for a given function (replay).
ProblemInstance make_problem_from_function(const ExperimentConfig& config, RkhsFunction truth, int function_id);

AlgorithmConfig algorithm_config(const ExperimentConfig& config, const AlgorithmParams& params,
                                 const ProblemInstance& problem, std::uint64_t rng_seed);

/// Calls fn(i) for i in [0, n) on `jobs` worker threads. If any call throws,
/// the exception of the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct BatchResult {
    std::vector<ProblemInstance> problems;
    /// Sorted by run_id (algorithm-major, then function, then seed).
    std::vector<RunTrace> traces;
    MetricsSummary summary;
};

BatchResult run_experiment_batch(const ExperimentConfig& config, int jobs = 1);
BatchResult run_experiment_batch(const ExperimentConfig& config, std::vector<ProblemInstance> problems, int jobs = 1);

std::string traces_csv(const std::vector<RunTrace>& traces);
std::string aggregate_csv(const MetricsSummary& summary);

/// Diagnostic snapshot of the first Lipschitz-certified 1-D run (nullopt otherwise).
std::optional<DiagnosticData> diagnostic_for(const ExperimentConfig& config, const BatchResult& result);

/// Writes traces.csv, aggregate.csv, metadata.txt, functions/ and (optionally) SVG plots.
void write_batch_outputs(const ExperimentConfig& config, const BatchResult& result, const std::filesystem::path& out,
                         bool plots);

struct AuditRun {
    std::string schedule;
    int function_id = 0;
    int seed = 0;
    int data_points = 0;
    double beta = 0.0;
    /// Fraction of fine-grid points with |f - mu| > beta sigma.
    double violation_fraction = 0.0;
    bool any_violation = false;
};

struct AuditScheduleSummary {
    std::string schedule;
    int runs = 0;
    int runs_with_violation = 0;
    double violation_run_frequency = 0.0;
    double mean_violation_fraction = 0.0;
    double std_violation_fraction = 0.0;
    double mean_beta = 0.0;
};

struct AuditResult {
    std::vector<ProblemInstance> problems;
    /// Sorted by (function, seed, schedule order).
    std::vector<AuditRun> runs;
    std::vector<AuditScheduleSummary> schedules;

    const AuditScheduleSummary& schedule(const std::string& name) const;
};

/// Fits the GP on random noisy data from each function and measures how often
/// the beta-scaled interval misses the truth on a fine grid.
AuditResult bound_audit(const ExperimentConfig& config, int jobs = 1);

std::string audit_csv(const AuditResult& result);
std::string audit_aggregate_csv(const AuditResult& result);
void write_audit_outputs(const ExperimentConfig& config, const AuditResult& result, const std::filesystem::path& out);

}  // namespace safebo::harness
