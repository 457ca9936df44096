#include "safebo/harness/metrics.hpp"

#include "safebo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace safebo::harness {

RunMetrics run_metrics(const RunTrace& trace) {
    RunMetrics m;
    m.run_id = trace.run_id;
    m.algorithm = trace.algorithm;
    m.function_id = trace.function_id;
    m.seed = trace.seed;
    double best = trace.h;
    bool any_safe = false;
    for (const auto& r : trace.records) {
        if (!r.safe_actual) {
            ++m.violation_count;
            if (m.first_violation_t < 0) m.first_violation_t = r.t;
        } else if (!any_safe || r.f_true > best) {
            best = any_safe ? std::max(best, r.f_true) : r.f_true;
            any_safe = true;
        }
        m.simple_regret.push_back(trace.safe_optimum - best);
    }
    return m;
}

namespace {

struct Accumulator {
    std::vector<std::vector<double>> regret;
    std::vector<int> violations;
    int runs = 0;

    void add(const RunMetrics& m, const RunTrace& trace) {
        const std::size_t n = m.simple_regret.size();
        if (regret.size() < n) {
            regret.resize(n);
            violations.resize(n, 0);
        }
        int cumulative = 0;
        for (std::size_t i = 0; i < n; ++i) {
            regret[i].push_back(m.simple_regret[i]);
            if (!trace.records[i].safe_actual) ++cumulative;
            violations[i] += cumulative;
        }
        ++runs;
    }

    void emit(const std::string& algorithm, int function_id, std::vector<AggregateRow>& out) const {
        for (std::size_t i = 0; i < regret.size(); ++i) {
            const auto& v = regret[i];
            AggregateRow row;
            row.algorithm = algorithm;
            row.function_id = function_id;
            row.t = static_cast<int>(i) + 1;
            row.runs = runs;
            double mean = 0.0;
            for (double r : v) mean += r;
            mean /= static_cast<double>(v.size());
            if (std::all_of(v.begin(), v.end(), [&](double r) { return r == v.front(); })) mean = v.front();
            double var = 0.0;
            for (double r : v) var += (r - mean) * (r - mean);
            row.mean_simple_regret = mean;
            row.std_simple_regret = std::sqrt(var / static_cast<double>(v.size()));
            row.total_violations = violations[i];
            out.push_back(row);
        }
    }
};

}  // namespace

MetricsSummary compute_metrics(const std::vector<RunTrace>& traces) {
    MetricsSummary summary;
    std::vector<std::string> order;
    std::map<std::string, std::map<int, Accumulator>> per_function;
    std::map<std::string, Accumulator> overall;
    for (const auto& trace : traces) {
        auto m = run_metrics(trace);
        if (std::find(order.begin(), order.end(), trace.algorithm) == order.end()) order.push_back(trace.algorithm);
        per_function[trace.algorithm][trace.function_id].add(m, trace);
        overall[trace.algorithm].add(m, trace);
        summary.runs.push_back(std::move(m));
    }
    for (const auto& alg : order) {
        for (const auto& [fid, acc] : per_function[alg]) acc.emit(alg, fid, summary.aggregates);
        overall[alg].emit(alg, kAllFunctions, summary.aggregates);
    }
    return summary;
}

int MetricsSummary::total_violations(const std::string& algorithm) const {
    int total = 0;
    for (const auto& r : runs) {
        if (r.algorithm == algorithm) total += r.violation_count;
    }
    return total;
}

double MetricsSummary::mean_regret(const std::string& algorithm, int t) const {
    for (const auto& row : aggregates) {
        if (row.algorithm == algorithm && row.function_id == kAllFunctions && row.t == t) return row.mean_simple_regret;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace safebo::harness
