#include "safebo/kernel.hpp"

#include "safebo/errors.hpp"

#include <cmath>

namespace safebo {

std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "squared_exponential" || name == "se" || name == "rbf") return KernelFamily::SquaredExponential;
    if (name == "matern32") return KernelFamily::Matern32;
    if (name == "matern52") return KernelFamily::Matern52;
    throw ArgumentError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, Eigen::VectorXd lengthscale, double signal_variance)
    : family_(family), lengthscale_(std::move(lengthscale)), signal_variance_(signal_variance) {
    if (lengthscale_.size() == 0) throw ArgumentError("kernel needs at least one lengthscale");
    if (!(lengthscale_.array() > 0.0).all()) throw ArgumentError("kernel lengthscales must be positive");
    if (!(signal_variance_ > 0.0)) throw ArgumentError("kernel signal variance must be positive");
}

void KernelSpec::check_dimension(Eigen::Index dim) const {
    if (!is_isotropic() && lengthscale_.size() != dim) {
        throw ArgumentError("point dimension " + std::to_string(dim) + " does not match " +
                            std::to_string(lengthscale_.size()) + " lengthscales");
    }
}

double KernelSpec::scaled_distance(const Point& x, const Point& x2) const {
    if (x.size() != x2.size()) {
        throw ArgumentError("kernel arguments have different dimensions (" + std::to_string(x.size()) + " vs " +
                            std::to_string(x2.size()) + ")");
    }
    check_dimension(x.size());
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double ell = is_isotropic() ? lengthscale_[0] : lengthscale_[i];
        const double d = (x[i] - x2[i]) / ell;
        r2 += d * d;
    }
    return std::sqrt(r2);
}

double KernelSpec::from_scaled_distance(double r) const {
    switch (family_) {
        case KernelFamily::SquaredExponential:
            return signal_variance_ * std::exp(-0.5 * r * r);
        case KernelFamily::Matern32: {
            const double s = std::sqrt(3.0) * r;
            return signal_variance_ * (1.0 + s) * std::exp(-s);
        }
        case KernelFamily::Matern52: {
            const double s = std::sqrt(5.0) * r;
            return signal_variance_ * (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
    }
    return 0.0;
}

double KernelSpec::operator()(const Point& x, const Point& x2) const {
    return from_scaled_distance(scaled_distance(x, x2));
}

double kernel_eval(const KernelSpec& spec, const Point& x, const Point& x2) { return spec(x, x2); }

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const Point> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = spec(points[i], points[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            gram(i, j) = spec(points[i], points[j]);
            gram(j, i) = gram(i, j);
        }
    }
    return gram;
}

Eigen::VectorXd cross_covariance(const KernelSpec& spec, std::span<const Point> points, const Point& x) {
    Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
    for (Eigen::Index i = 0; i < k.size(); ++i) k[i] = spec(x, points[i]);
    return k;
}

}  // namespace safebo
