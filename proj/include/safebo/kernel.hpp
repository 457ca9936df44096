#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safebo {

using Point = Eigen::VectorXd;

enum class KernelFamily { SquaredExponential, Matern32, Matern52 };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary covariance function. The lengthscale vector has either one
/// entry (isotropic) or one entry per input dimension.
class KernelSpec {
public:
    KernelSpec(KernelFamily family, Eigen::VectorXd lengthscale, double signal_variance);

    static KernelSpec isotropic(KernelFamily family, double lengthscale, double signal_variance) {
        return KernelSpec(family, Eigen::VectorXd::Constant(1, lengthscale), signal_variance);
    }

    KernelFamily family() const { return family_; }
    const Eigen::VectorXd& lengthscale() const { return lengthscale_; }
    double signal_variance() const { return signal_variance_; }
    bool is_isotropic() const { return lengthscale_.size() == 1; }

    /// Throws ArgumentError when a point of dimension `dim` cannot be used
    /// with this kernel (per-dimension lengthscales of another size).
    void check_dimension(Eigen::Index dim) const;

    /// k(x, x2).
    double operator()(const Point& x, const Point& x2) const;

    /// Scaled distance r = ||(x - x2) / lengthscale||.
    double scaled_distance(const Point& x, const Point& x2) const;

    /// Covariance as a function of the scaled distance.
    double from_scaled_distance(double r) const;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
    KernelFamily family_;
    Eigen::VectorXd lengthscale_;
    double signal_variance_;
};

double kernel_eval(const KernelSpec& spec, const Point& x, const Point& x2);

/// Dense Gram matrix K_ij = k(points_i, points_j).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const Point> points);

/// Cross-covariance vector k_i = k(x, points_i).
Eigen::VectorXd cross_covariance(const KernelSpec& spec, std::span<const Point> points, const Point& x);

}  // namespace safebo
