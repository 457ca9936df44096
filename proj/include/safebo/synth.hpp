#pragma once

#include "safebo/gp.hpp"
#include "safebo/kernel.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace safebo {

using Rng = std::mt19937_64;

/// Deterministic seed for an independent stream identified by (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Uniform sample from a box.
Point sample_uniform(const Box& box, Rng& rng);

/// f(x) = sum_i a_i k(x, z_i), an element of the RKHS of `kernel` with
/// exactly computable norm.
class RkhsFunction {
public:
    RkhsFunction(KernelSpec kernel, std::vector<Point> centers, std::vector<double> coefficients);

    const KernelSpec& kernel() const { return kernel_; }
    const std::vector<Point>& centers() const { return centers_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    Eigen::Index dim() const { return centers_.front().size(); }

    double operator()(const Point& x) const;

    RkhsFunction scaled(double s) const;

private:
    KernelSpec kernel_;
    std::vector<Point> centers_;
    std::vector<double> coefficients_;
};

/// sqrt(a^T K_z a).
double rkhs_norm(const RkhsFunction& f);

/// m centers uniform in the box, standard normal coefficients rescaled to
/// RKHS norm `target_norm`.
RkhsFunction sample_rkhs_function(const KernelSpec& kernel, const Box& box, int m, double target_norm,
                                  std::uint64_t seed);

inline constexpr double kLipschitzSafetyFactor = 1.1;

/// Largest finite-difference gradient norm over a grid with `resolution`
/// points per axis (no safety factor).
double max_finite_difference_slope(const RkhsFunction& f, const Box& box, int resolution);

/// Lipschitz estimate used by the harness: max_finite_difference_slope * kLipschitzSafetyFactor.
double lipschitz_oracle(const RkhsFunction& f, const Box& box, int resolution);

struct UniformBounded {
    double E = 0.0;
};
struct GaussianUnbounded {
    double sigma = 0.0;
};
using NoiseModel = std::variant<UniformBounded, GaussianUnbounded>;

/// Per-run noise stream.
class NoiseStream {
public:
    NoiseStream(NoiseModel model, std::uint64_t seed);
    double draw();
    const NoiseModel& model() const { return model_; }

private:
    NoiseModel model_;
    Rng rng_;
};

double noisy_eval(const RkhsFunction& f, NoiseStream& noise, const Point& x);

/// Plain-text record: a kernel line followed by one "center coords... coefficient" line per center.
void write_function_record(std::ostream& os, const RkhsFunction& f);
std::string function_record(const RkhsFunction& f);
RkhsFunction read_function_record(std::istream& is);

}  // namespace safebo
