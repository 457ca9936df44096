#include "safebo/gp.hpp"

#include "safebo/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace safebo {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() == 0 || lower.size() != upper.size()) throw ArgumentError("box bounds must have equal, nonzero size");
    if (!(lower.array() <= upper.array()).all()) throw ArgumentError("box lower bound exceeds upper bound");
}

bool Box::contains(const Point& x, double tol) const {
    if (x.size() != dim()) return false;
    return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

Point Box::project(const Point& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void Dataset::append(const Point& x, double y) {
    if (x.size() != dim()) {
        throw ArgumentError("observation has dimension " + std::to_string(x.size()) + ", dataset expects " +
                            std::to_string(dim()));
    }
    if (!domain_.contains(x)) throw ArgumentError("observation lies outside the domain box");
    if (!std::isfinite(y)) throw ArgumentError("observation value is not finite");
    inputs_.push_back(x);
    outputs_.push_back(y);
}

Eigen::VectorXd Dataset::output_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(outputs_.data(), static_cast<Eigen::Index>(outputs_.size()));
}

namespace {

std::string condition_report(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "Cholesky factorization of the " << m.rows() << "x" << m.cols() << " regularized Gram matrix failed";
    if (eig.info() == Eigen::Success && m.rows() > 0) {
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        os << " (min eigenvalue " << lo << ", max eigenvalue " << hi << ", condition " << hi / lo << ")";
    }
    return os.str();
}

}  // namespace

GpPosterior::GpPosterior(KernelSpec kernel, Dataset data, double lambda)
    : kernel_(std::move(kernel)), data_(std::move(data)), lambda_(lambda) {
    if (!(lambda_ > 0.0)) throw ArgumentError("GP regularizer lambda must be positive");
    kernel_.check_dimension(data_.dim());
    refactor();
}

void GpPosterior::refactor() {
    Eigen::MatrixXd gram = gram_matrix(kernel_, data_.inputs());
    gram.diagonal().array() += lambda_;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericError(condition_report(gram));
    chol_ = llt.matrixL();
    incremental_steps_ = 0;
    solve_alpha();
}

void GpPosterior::solve_alpha() {
    alpha_ = data_.output_vector();
    chol_.triangularView<Eigen::Lower>().solveInPlace(alpha_);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

double GpPosterior::variance(const Point& x) const {
    if (x.size() != data_.dim()) throw ArgumentError("prediction point has wrong dimension");
    const double prior = kernel_(x, x);
    if (data_.empty()) return prior;
    const Eigen::VectorXd k = cross_covariance(kernel_, data_.inputs(), x);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double var = prior - v.squaredNorm();
    if (var < 0.0) {
        if (var < -1e-12 * kernel_.signal_variance()) {
            throw NumericError("posterior variance " + std::to_string(var) + " is negative beyond round-off");
        }
        return 0.0;
    }
    return std::min(var, prior);
}

Prediction GpPosterior::predict(const Point& x) const {
    if (x.size() != data_.dim()) throw ArgumentError("prediction point has wrong dimension");
    if (data_.empty()) return {0.0, std::sqrt(kernel_(x, x))};
    const Eigen::VectorXd k = cross_covariance(kernel_, data_.inputs(), x);
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double prior = kernel_(x, x);
    double var = prior - v.squaredNorm();
    if (var < 0.0) {
        if (var < -1e-12 * kernel_.signal_variance()) {
            throw NumericError("posterior variance " + std::to_string(var) + " is negative beyond round-off");
        }
        var = 0.0;
    }
    return {mean, std::sqrt(std::min(var, prior))};
}

GpPosterior GpPosterior::add_observation(const Point& x, double y) const {
    GpPosterior next;
    next.kernel_ = kernel_;
    next.data_ = data_;
    next.lambda_ = lambda_;
    next.data_.append(x, y);

    const Eigen::Index n = chol_.rows();
    if (incremental_steps_ + 1 >= kRefactorInterval) {
        next.refactor();
        return next;
    }

    // Append one row to the factor: [L 0; l^T d] with L l = k, d^2 = k(x,x) + lambda - l^T l.
    const Eigen::VectorXd k = cross_covariance(kernel_, data_.inputs(), x);
    Eigen::VectorXd row = chol_.triangularView<Eigen::Lower>().solve(k);
    const double d2 = kernel_(x, x) + lambda_ - row.squaredNorm();
    if (!(d2 > 0.0)) {
        next.refactor();
        return next;
    }
    next.chol_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    next.chol_.topLeftCorner(n, n) = chol_;
    next.chol_.block(n, 0, 1, n) = row.transpose();
    next.chol_(n, n) = std::sqrt(d2);
    next.incremental_steps_ = incremental_steps_ + 1;
    next.solve_alpha();
    return next;
}

double GpPosterior::logdet_regularized_gram() const {
    const auto t = static_cast<double>(data_.size());
    if (data_.empty()) return 0.0;
    const double logdet = 2.0 * chol_.diagonal().array().log().sum() - t * std::log(lambda_);
    return std::max(logdet, 0.0);
}

GpPosterior fit_posterior(const KernelSpec& kernel, const Dataset& data, double lambda) {
    return GpPosterior(kernel, data, lambda);
}

Prediction predict(const GpPosterior& post, const Point& x) { return post.predict(x); }

GpPosterior add_observation(const GpPosterior& post, const Point& x, double y) { return post.add_observation(x, y); }

double logdet_regularized_gram(const GpPosterior& post) { return post.logdet_regularized_gram(); }

}  // namespace safebo
