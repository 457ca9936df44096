#include "safebo/errors.hpp"
#include "safebo/kernel.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace safebo;

namespace {

Point p1(double v) { return Point::Constant(1, v); }

const KernelFamily kFamilies[] = {KernelFamily::SquaredExponential, KernelFamily::Matern32, KernelFamily::Matern52};

}  // namespace

TEST_CASE("kernel values at reference points") {
    const auto se = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0);
    CHECK(kernel_eval(se, p1(0), p1(0)) == 1.0);
    CHECK(kernel_eval(se, p1(0), p1(1)) == doctest::Approx(0.606531).epsilon(1e-6));
    CHECK(kernel_eval(se, p1(0), p1(1)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

    const auto m32 = KernelSpec::isotropic(KernelFamily::Matern32, 1.0, 1.0);
    CHECK(kernel_eval(m32, p1(0), p1(0)) == 1.0);
    CHECK(kernel_eval(m32, p1(0), p1(1)) == doctest::Approx((1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0))));

    const auto m52 = KernelSpec::isotropic(KernelFamily::Matern52, 2.0, 3.0);
    const double s = std::sqrt(5.0) * 0.5;
    CHECK(kernel_eval(m52, p1(0), p1(1)) == doctest::Approx(3.0 * (1 + s + s * s / 3) * std::exp(-s)));
}

TEST_CASE("k(x, x) equals the signal variance and k is symmetric") {
    Rng rng(7);
    const Box box = Box::unit(3);
    for (auto fam : kFamilies) {
        KernelSpec k(fam, Eigen::Vector3d(0.2, 0.5, 1.3), 2.5);
        for (int i = 0; i < 50; ++i) {
            const Point a = sample_uniform(box, rng), b = sample_uniform(box, rng);
            CHECK(k(a, a) == 2.5);
            CHECK(k(a, b) == k(b, a));
            CHECK(k(a, b) <= 2.5);
        }
    }
}

TEST_CASE("per-dimension lengthscales scale each axis") {
    KernelSpec k(KernelFamily::SquaredExponential, Eigen::Vector2d(1.0, 2.0), 1.0);
    CHECK(k(Point::Zero(2), Eigen::Vector2d(0.0, 2.0)) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("invalid kernels and dimension mismatches are argument errors") {
    CHECK_THROWS_AS(KernelSpec::isotropic(KernelFamily::Matern32, 0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(KernelSpec::isotropic(KernelFamily::Matern32, 1.0, -1.0), ArgumentError);
    const auto k = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0);
    CHECK_THROWS_AS(k(Point::Zero(1), Point::Zero(2)), ArgumentError);
    KernelSpec ard(KernelFamily::SquaredExponential, Eigen::Vector2d(1.0, 1.0), 1.0);
    CHECK_THROWS_AS(ard(Point::Zero(3), Point::Zero(3)), ArgumentError);
    CHECK_THROWS_AS(parse_kernel_family("cosine"), ArgumentError);
}

TEST_CASE("Gram matrices are positive semidefinite") {
    Rng rng(11);
    for (auto fam : kFamilies) {
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 1 + static_cast<int>(rng() % 50);
            const Box box = Box::unit(1 + static_cast<int>(rng() % 3));
            const auto pts = testing::random_points(rng, box, n);
            const auto k = KernelSpec::isotropic(fam, 0.3, 1.7);
            const Eigen::MatrixXd g = gram_matrix(k, pts);
            CHECK((g - g.transpose()).norm() == 0.0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * g.trace());
        }
    }
}
