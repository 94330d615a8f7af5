#include <doctest.h>

#include <cmath>

#include "crbreak/errors.hpp"
#include "crbreak/lrv.hpp"
#include "crbreak/rng.hpp"

using namespace crbreak;

namespace {

Eigen::VectorXd ar1(int n, double a, std::uint64_t seed) {
    Stream rng(seed);
    Eigen::VectorXd x(n);
    double prev = rng.normal() / std::sqrt(1.0 - a * a);
    for (int t = 0; t < n; ++t) {
        prev = a * prev + rng.normal();
        x(t) = prev;
    }
    return x;
}

}  // namespace

TEST_CASE("quadratic spectral kernel") {
    CHECK(qs_kernel(0.0) == 1.0);
    CHECK(qs_kernel(1e-9) == doctest::Approx(1.0));
    const double edge = 0.05 * 5.0 / (6.0 * M_PI);
    CHECK(qs_kernel(edge * (1 - 1e-9)) == doctest::Approx(qs_kernel(edge * (1 + 1e-9))).epsilon(1e-10));
    // closed form at x = 1
    const double z = 6.0 * M_PI / 5.0;
    CHECK(qs_kernel(1.0) == doctest::Approx(25.0 / (12.0 * M_PI * M_PI) * (std::sin(z) / z - std::cos(z))));
    CHECK(qs_kernel(-2.0) == qs_kernel(2.0));
}

TEST_CASE("long-run variance of white noise") {
    const auto est = long_run_variance(ar1(2000, 0.0, 17));
    CHECK(est.value == doctest::Approx(1.0).epsilon(0.15));
    CHECK_FALSE(est.clipped);
}

TEST_CASE("long-run variance of an AR(1)") {
    // 1 / (1 - 0.5)^2 = 4
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto est = long_run_variance(ar1(5000, 0.5, seed));
        CHECK(est.value == doctest::Approx(4.0).epsilon(0.2));
        CHECK(est.ar_coef == doctest::Approx(0.5).epsilon(0.1));
    }
}

TEST_CASE("prewhitening guard and degenerate input") {
    Eigen::VectorXd trend(200);
    for (int t = 0; t < 200; ++t) trend(t) = t;
    const auto est = long_run_variance(trend);
    CHECK(est.clipped);
    CHECK(std::abs(est.ar_coef) == doctest::Approx(kMaxPrewhitenCoef));

    CHECK_THROWS_AS(long_run_variance(Eigen::VectorXd::Constant(50, 3.0)), Error);
    CHECK_THROWS_AS(long_run_variance(Eigen::VectorXd::Ones(5)), Error);
}

TEST_CASE("fixed bandwidth without prewhitening matches a direct kernel sum") {
    const Eigen::VectorXd x = ar1(300, 0.3, 9);
    LrvConfig cfg;
    cfg.prewhiten = false;
    cfg.bandwidth = 4.0;
    const Eigen::VectorXd u = x.array() - x.mean();
    const int n = static_cast<int>(u.size());
    double ref = u.squaredNorm() / n;
    for (int j = 1; j < n; ++j) {
        const double g = u.head(n - j).dot(u.tail(n - j)) / n;
        ref += 2.0 * qs_kernel(j / 4.0) * g;
    }
    CHECK(long_run_variance(x, cfg).value == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("matrix long-run covariance reduces to the scalar case") {
    const Eigen::VectorXd x = ar1(1000, 0.4, 4);
    LrvConfig cfg;
    cfg.bandwidth = 5.0;
    const auto scalar = long_run_variance(x, cfg);
    const auto matrix = long_run_covariance(Eigen::MatrixXd(x), cfg);
    CHECK(matrix.value(0, 0) == doctest::Approx(scalar.value).epsilon(1e-8));

    Eigen::MatrixXd two(1000, 2);
    two.col(0) = x;
    two.col(1) = ar1(1000, 0.0, 5);
    const auto cov = long_run_covariance(two);
    CHECK(cov.value.isApprox(cov.value.transpose()));
    CHECK(cov.value(1, 1) == doctest::Approx(1.0).epsilon(0.2));
}
