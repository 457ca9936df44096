#pragma once

#include "safebo/harness/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace safebo::harness {

/// 1-D snapshot: truth, GP band, Lipschitz envelope and certified safe set.
struct DiagnosticData {
    std::string title;
    std::vector<double> x;
    std::vector<double> truth;
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
    /// -inf where nothing is certified.
    std::vector<double> envelope;
    std::vector<char> safe;
    double h = 0.0;
    std::vector<double> obs_x;
    std::vector<double> obs_y;
};

/// Simple regret vs. t: thick overall mean, thin per-function means, one-std band.
std::string render_regret_svg(const MetricsSummary& summary);
/// Total unsafe queries per algorithm.
std::string render_violations_svg(const MetricsSummary& summary);
std::string render_diagnostic_svg(const DiagnosticData& data);

/// Writes regret.svg, violations.svg and (when given) diagnostic.svg into `dir`.
/// Returns the written file names; empty traces produce a warning on stderr and nothing else.
std::vector<std::string> render_plots(const MetricsSummary& summary, const std::vector<RunTrace>& traces,
                                      const std::filesystem::path& dir,
                                      const std::optional<DiagnosticData>& diagnostic = std::nullopt);

}  // namespace safebo::harness
