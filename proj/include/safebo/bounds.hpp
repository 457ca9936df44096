#pragma once

#include "safebo/gp.hpp"

#include <limits>
#include <variant>

namespace safebo {

/// beta_t == c for every t.
struct ConstantHeuristic {
    double c = 2.0;
};

/// Scaling factor valid for f in the RKHS with norm <= B under R-sub-Gaussian noise:
///   beta_t = B + (R / sqrt(lambda)) * sqrt(ln det(I + K_t / lambda) - 2 ln delta).
struct RkhsNormBound {
    double B = 1.0;
    double R = 0.1;
    double delta = 0.05;
};

using BetaSchedule = std::variant<ConstantHeuristic, RkhsNormBound>;

double beta_value(const BetaSchedule& schedule, const GpPosterior& post);

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double width() const { return upper - lower; }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

ConfidenceInterval gp_confidence_interval(const GpPosterior& post, double beta, const Point& x);
ConfidenceInterval gp_confidence_interval(const GpPosterior& post, const BetaSchedule& schedule, const Point& x);

/// Lipschitz bound L of f (Euclidean metric) and almost-sure noise bound |eta| <= E.
struct LipschitzSafetyModel {
    double L = 1.0;
    double E = 0.0;

    LipschitzSafetyModel() = default;
    LipschitzSafetyModel(double lipschitz, double noise_bound);
};

inline constexpr double kNoCertificate = -std::numeric_limits<double>::infinity();

/// max_i (y_i - E - L ||x - x_i||), or kNoCertificate for an empty dataset.
double lipschitz_lower_envelope(const Dataset& data, const LipschitzSafetyModel& model, const Point& x);

}  // namespace safebo
