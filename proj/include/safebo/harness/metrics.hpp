#pragma once

#include "safebo/optimizers.hpp"

#include <string>
#include <vector>

namespace safebo::harness {

/// One optimization run with its ground-truth references.
struct RunTrace {
    int run_id = 0;
    std::string algorithm;
    int function_id = 0;
    int seed = 0;
    double h = 0.0;
    /// max f over the reference grid points with f >= h.
    double safe_optimum = 0.0;
    std::vector<IterationRecord> records;
};

struct RunMetrics {
    int run_id = 0;
    std::string algorithm;
    int function_id = 0;
    int seed = 0;
    int violation_count = 0;
    /// -1 when the run never queried an unsafe point.
    int first_violation_t = -1;
    /// simple_regret[t-1] = safe optimum - best safe f_true among queries 1..t
    /// (safe optimum - h before the first safe query).
    std::vector<double> simple_regret;
};

/// Sentinel for aggregate rows spanning all functions.
inline constexpr int kAllFunctions = -1;

struct AggregateRow {
    std::string algorithm;
    int function_id = kAllFunctions;
    int t = 0;
    double mean_simple_regret = 0.0;
    /// Population standard deviation over runs.
    double std_simple_regret = 0.0;
    /// Unsafe queries up to and including t, summed over runs.
    int total_violations = 0;
    int runs = 0;
};

struct MetricsSummary {
    std::vector<RunMetrics> runs;
    /// Sorted by algorithm (first-appearance order), then function (ALL last), then t.
    std::vector<AggregateRow> aggregates;

    int total_violations(const std::string& algorithm) const;
    /// Overall mean simple regret of `algorithm` at iteration t, or NaN.
    double mean_regret(const std::string& algorithm, int t) const;
};

RunMetrics run_metrics(const RunTrace& trace);
MetricsSummary compute_metrics(const std::vector<RunTrace>& traces);

}  // namespace safebo::harness
