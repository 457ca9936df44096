#include "safebo/bounds.hpp"

#include "safebo/errors.hpp"

#include <algorithm>
#include <cmath>

namespace safebo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double beta_value(const BetaSchedule& schedule, const GpPosterior& post) {
    return std::visit(
        overloaded{
            [](const ConstantHeuristic& s) {
                if (!(s.c > 0.0)) throw ArgumentError("heuristic beta must be positive");
                return s.c;
            },
            [&post](const RkhsNormBound& s) {
                if (!(s.delta > 0.0 && s.delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
                if (!(s.B > 0.0)) throw ArgumentError("RKHS norm bound B must be positive");
                if (s.R < 0.0) throw ArgumentError("noise scale R must be non-negative");
                const double info = post.logdet_regularized_gram() - 2.0 * std::log(s.delta);
                return s.B + s.R / std::sqrt(post.lambda()) * std::sqrt(info);
            },
        },
        schedule);
}

ConfidenceInterval gp_confidence_interval(const GpPosterior& post, double beta, const Point& x) {
    const Prediction p = post.predict(x);
    return {p.mean - beta * p.std, p.mean + beta * p.std};
}

ConfidenceInterval gp_confidence_interval(const GpPosterior& post, const BetaSchedule& schedule, const Point& x) {
    return gp_confidence_interval(post, beta_value(schedule, post), x);
}

LipschitzSafetyModel::LipschitzSafetyModel(double lipschitz, double noise_bound) : L(lipschitz), E(noise_bound) {
    if (!(L > 0.0)) throw ArgumentError("Lipschitz bound L must be positive");
    if (!(E >= 0.0)) throw ArgumentError("noise bound E must be non-negative");
}

double lipschitz_lower_envelope(const Dataset& data, const LipschitzSafetyModel& model, const Point& x) {
    double best = kNoCertificate;
    const auto& xs = data.inputs();
    const auto& ys = data.outputs();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        best = std::max(best, ys[i] - model.E - model.L * (x - xs[i]).norm());
    }
    return best;
}

}  // namespace safebo
