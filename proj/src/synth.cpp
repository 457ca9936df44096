#include "safebo/synth.hpp"

#include "safebo/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace safebo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

Point sample_uniform(const Box& box, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point p(box.dim());
    for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = box.lower[k] + u(rng) * (box.upper[k] - box.lower[k]);
    return p;
}

RkhsFunction::RkhsFunction(KernelSpec kernel, std::vector<Point> centers, std::vector<double> coefficients)
    : kernel_(std::move(kernel)), centers_(std::move(centers)), coefficients_(std::move(coefficients)) {
    if (centers_.empty()) throw ArgumentError("RKHS function needs at least one center");
    if (centers_.size() != coefficients_.size()) throw ArgumentError("centers and coefficients differ in length");
    for (const auto& c : centers_) {
        if (c.size() != centers_.front().size()) throw ArgumentError("centers have inconsistent dimensions");
    }
    kernel_.check_dimension(centers_.front().size());
}

double RkhsFunction::operator()(const Point& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < centers_.size(); ++i) v += coefficients_[i] * kernel_(x, centers_[i]);
    return v;
}

RkhsFunction RkhsFunction::scaled(double s) const {
    auto a = coefficients_;
    for (auto& v : a) v *= s;
    return RkhsFunction(kernel_, centers_, std::move(a));
}

double rkhs_norm(const RkhsFunction& f) {
    const Eigen::MatrixXd gram = gram_matrix(f.kernel(), f.centers());
    const Eigen::Map<const Eigen::VectorXd> a(f.coefficients().data(),
                                              static_cast<Eigen::Index>(f.coefficients().size()));
    return std::sqrt(std::max(0.0, a.dot(gram * a)));
}

RkhsFunction sample_rkhs_function(const KernelSpec& kernel, const Box& box, int m, double target_norm,
                                  std::uint64_t seed) {
    if (m < 1) throw ArgumentError("number of centers must be at least 1");
    if (!(target_norm > 0.0)) throw ArgumentError("target RKHS norm must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr int kMaxAttempts = 5;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<Point> centers;
        std::vector<double> coeffs;
        for (int i = 0; i < m; ++i) centers.push_back(sample_uniform(box, rng));
        for (int i = 0; i < m; ++i) coeffs.push_back(normal(rng));
        RkhsFunction f(kernel, std::move(centers), std::move(coeffs));
        const double norm = rkhs_norm(f);
        if (norm > 1e-8 && std::isfinite(norm)) return f.scaled(target_norm / norm);
    }
    throw NumericError("could not draw a non-degenerate RKHS function in 5 attempts");
}

double max_finite_difference_slope(const RkhsFunction& f, const Box& box, int resolution) {
    if (resolution < 2) throw ArgumentError("Lipschitz oracle needs at least 2 points per axis");
    const auto d = box.dim();
    if (d != f.dim()) throw ArgumentError("box and function dimensions differ");
    std::size_t total = 1;
    for (Eigen::Index k = 0; k < d; ++k) total *= static_cast<std::size_t>(resolution);

    Eigen::VectorXd step = (box.upper - box.lower) / (resolution - 1);
    std::vector<double> values(total);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    auto point_at = [&](const std::vector<int>& id) {
        Point p(d);
        for (Eigen::Index k = 0; k < d; ++k) p[k] = box.lower[k] + id[k] * step[k];
        return p;
    };
    for (std::size_t n = 0; n < total; ++n) {
        values[n] = f(point_at(idx));
        for (auto k = static_cast<std::ptrdiff_t>(d) - 1; k >= 0; --k) {
            if (++idx[k] < resolution) break;
            idx[k] = 0;
        }
    }

    // Row-major strides.
    std::vector<std::size_t> stride(static_cast<std::size_t>(d), 1);
    for (auto k = static_cast<std::ptrdiff_t>(d) - 2; k >= 0; --k) stride[k] = stride[k + 1] * resolution;

    double best = 0.0;
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        double g2 = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            if (step[k] == 0.0) continue;
            // Forward difference, backward at the upper edge.
            const bool last = idx[k] == resolution - 1;
            const std::size_t a = last ? n - stride[k] : n;
            const std::size_t b = last ? n : n + stride[k];
            const double s = (values[b] - values[a]) / step[k];
            g2 += s * s;
        }
        best = std::max(best, std::sqrt(g2));
        for (auto k = static_cast<std::ptrdiff_t>(d) - 1; k >= 0; --k) {
            if (++idx[k] < resolution) break;
            idx[k] = 0;
        }
    }
    return best;
}

double lipschitz_oracle(const RkhsFunction& f, const Box& box, int resolution) {
    return kLipschitzSafetyFactor * max_finite_difference_slope(f, box, resolution);
}

NoiseStream::NoiseStream(NoiseModel model, std::uint64_t seed) : model_(model), rng_(seed) {
    if (const auto* u = std::get_if<UniformBounded>(&model_); u && !(u->E >= 0.0)) {
        throw ArgumentError("noise bound E must be non-negative");
    }
    if (const auto* g = std::get_if<GaussianUnbounded>(&model_); g && !(g->sigma >= 0.0)) {
        throw ArgumentError("noise standard deviation must be non-negative");
    }
}

double NoiseStream::draw() {
    if (const auto* u = std::get_if<UniformBounded>(&model_)) {
        if (u->E == 0.0) return 0.0;
        std::uniform_real_distribution<double> dist(-u->E, u->E);
        return dist(rng_);
    }
    const auto& g = std::get<GaussianUnbounded>(model_);
    if (g.sigma == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, g.sigma);
    return dist(rng_);
}

double noisy_eval(const RkhsFunction& f, NoiseStream& noise, const Point& x) { return f(x) + noise.draw(); }

void write_function_record(std::ostream& os, const RkhsFunction& f) {
    const auto& k = f.kernel();
    os << fmt::format("kernel {} {:.17g}", to_string(k.family()), k.signal_variance());
    for (double ell : k.lengthscale()) os << fmt::format(" {:.17g}", ell);
    os << '\n';
    for (std::size_t i = 0; i < f.centers().size(); ++i) {
        for (double c : f.centers()[i]) os << fmt::format("{:.17g} ", c);
        os << fmt::format("{:.17g}\n", f.coefficients()[i]);
    }
}

std::string function_record(const RkhsFunction& f) {
    std::ostringstream os;
    write_function_record(os, f);
    return os.str();
}

RkhsFunction read_function_record(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("function record is empty");
    std::istringstream head(line);
    std::string tag, family;
    double variance = 0.0;
    head >> tag >> family >> variance;
    if (tag != "kernel" || head.fail()) throw ArgumentError("function record must start with a kernel line");
    std::vector<double> ls;
    for (double v; head >> v;) ls.push_back(v);
    if (ls.empty()) throw ArgumentError("kernel line has no lengthscale");
    KernelSpec kernel(parse_kernel_family(family), Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size())),
                      variance);

    std::vector<Point> centers;
    std::vector<double> coeffs;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::vector<double> vals;
        for (double v; row >> v;) vals.push_back(v);
        if (!row.eof() || vals.size() < 2) {
            throw ArgumentError("malformed center line " + std::to_string(line_no) + " in function record");
        }
        coeffs.push_back(vals.back());
        vals.pop_back();
        centers.emplace_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    return RkhsFunction(std::move(kernel), std::move(centers), std::move(coeffs));
}

}  // namespace safebo
