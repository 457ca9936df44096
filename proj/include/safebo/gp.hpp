#pragma once

#include "safebo/kernel.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace safebo {

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Box(Eigen::VectorXd lo, Eigen::VectorXd hi);
    static Box unit(Eigen::Index dim) {
        return Box(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
    }

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const Point& x, double tol = 0.0) const;
    Point project(const Point& x) const;
    double diagonal() const { return (upper - lower).norm(); }
};

/// Observed inputs and noisy outputs inside a domain box.
class Dataset {
public:
    explicit Dataset(Box domain) : domain_(std::move(domain)) {}

    const Box& domain() const { return domain_; }
    Eigen::Index dim() const { return domain_.dim(); }
    std::size_t size() const { return inputs_.size(); }
    bool empty() const { return inputs_.empty(); }

    const std::vector<Point>& inputs() const { return inputs_; }
    const std::vector<double>& outputs() const { return outputs_; }

    /// Throws ArgumentError if x has the wrong dimension or lies outside the box.
    void append(const Point& x, double y);

    Eigen::VectorXd output_vector() const;

private:
    Box domain_;
    std::vector<Point> inputs_;
    std::vector<double> outputs_;
};

struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

/// Zero-mean GP posterior conditioned on a dataset with regularizer lambda.
///
/// Snapshots are immutable. add_observation() extends the Cholesky factor of
/// (K + lambda I) by one row and returns a new snapshot; every
/// kRefactorInterval incremental extensions the factor is rebuilt from scratch.
class GpPosterior {
public:
    static constexpr int kRefactorInterval = 64;

    GpPosterior(KernelSpec kernel, Dataset data, double lambda);

    const KernelSpec& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }
    double lambda() const { return lambda_; }
    std::size_t size() const { return data_.size(); }

    /// Lower-triangular factor of (K + lambda I).
    const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
    /// (K + lambda I)^{-1} y.
    const Eigen::VectorXd& alpha() const { return alpha_; }

    Prediction predict(const Point& x) const;
    double variance(const Point& x) const;

    GpPosterior add_observation(const Point& x, double y) const;

    /// ln det(I + K / lambda), from the factor.
    double logdet_regularized_gram() const;

private:
    GpPosterior() = default;
    void refactor();
    void solve_alpha();

    KernelSpec kernel_{KernelFamily::SquaredExponential, Eigen::VectorXd::Ones(1), 1.0};
    Dataset data_{Box::unit(1)};
    double lambda_ = 1.0;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    int incremental_steps_ = 0;
};

GpPosterior fit_posterior(const KernelSpec& kernel, const Dataset& data, double lambda);
Prediction predict(const GpPosterior& post, const Point& x);
GpPosterior add_observation(const GpPosterior& post, const Point& x, double y);
double logdet_regularized_gram(const GpPosterior& post);

}  // namespace safebo
