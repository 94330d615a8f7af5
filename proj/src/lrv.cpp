#include "crbreak/lrv.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "crbreak/errors.hpp"

namespace crbreak {

namespace {

constexpr int kMinLength = 10;

double clip(double a, bool& clipped) {
    if (std::abs(a) >= kMaxPrewhitenCoef) {
        clipped = true;
        return std::copysign(kMaxPrewhitenCoef, a);
    }
    return a;
}

// AR(1) fit without intercept: returns (coefficient, innovation variance).
std::pair<double, double> ar1_fit(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    const double sxx = x.head(n - 1).squaredNorm();
    if (sxx <= 0.0) return {0.0, 0.0};
    const double a = x.tail(n - 1).dot(x.head(n - 1)) / sxx;
    const Eigen::VectorXd u = x.tail(n - 1) - a * x.head(n - 1);
    return {a, u.squaredNorm() / static_cast<double>(n - 1)};
}

double andrews_bandwidth(const Eigen::MatrixXd& u) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        auto [a, s2] = ar1_fit(u.col(j));
        bool ignored = false;
        a = clip(a, ignored);
        const double s4 = s2 * s2;
        num += 4.0 * a * a * s4 / std::pow(1.0 - a, 8);
        den += s4 / std::pow(1.0 - a, 4);
    }
    const double alpha2 = den > 0.0 ? num / den : 0.0;
    return 1.3221 * std::pow(alpha2 * static_cast<double>(u.rows()), 0.2);
}

Eigen::MatrixXd kernel_sum(const Eigen::MatrixXd& u, double bandwidth) {
    const Eigen::Index n = u.rows();
    Eigen::MatrixXd omega = u.transpose() * u / static_cast<double>(n);
    if (bandwidth <= 0.0) return omega;
    for (Eigen::Index j = 1; j < n; ++j) {
        const double w = qs_kernel(static_cast<double>(j) / bandwidth);
        const Eigen::MatrixXd gamma =
            u.bottomRows(n - j).transpose() * u.topRows(n - j) / static_cast<double>(n);
        omega += w * (gamma + gamma.transpose());
    }
    return omega;
}

void check_length(Eigen::Index n) {
    if (n < kMinLength) {
        throw Error(ErrorKind::validation,
                    "long-run variance needs at least 10 observations, got " + std::to_string(n));
    }
}

}  // namespace

double qs_kernel(double x) noexcept {
    if (x == 0.0) return 1.0;
    const double z = 6.0 * std::numbers::pi * x / 5.0;
    if (std::abs(z) < 0.05) return 1.0 - z * z / 10.0 + z * z * z * z / 280.0;
    return 25.0 / (12.0 * std::numbers::pi * std::numbers::pi * x * x) * (std::sin(z) / z - std::cos(z));
}

LrvEstimate long_run_variance(const Eigen::VectorXd& series, const LrvConfig& cfg) {
    check_length(series.size());
    if (cfg.bandwidth && !(*cfg.bandwidth > 0.0)) {
        throw Error(ErrorKind::parameter, "fixed bandwidth must be positive, got " +
                                              std::to_string(*cfg.bandwidth));
    }
    const Eigen::VectorXd x = series.array() - series.mean();
    const double scale = x.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || x.squaredNorm() <= 1e-28 * static_cast<double>(x.size()) * scale * scale) {
        throw Error(ErrorKind::degenerate, "series has zero variance");
    }

    LrvEstimate out;
    Eigen::MatrixXd u;
    if (cfg.prewhiten) {
        out.ar_coef = clip(ar1_fit(x).first, out.clipped);
        u = x.tail(x.size() - 1) - out.ar_coef * x.head(x.size() - 1);
    } else {
        u = x;
    }
    out.bandwidth = cfg.bandwidth ? *cfg.bandwidth : andrews_bandwidth(u);
    const double omega = kernel_sum(u, out.bandwidth)(0, 0);
    out.value = omega / ((1.0 - out.ar_coef) * (1.0 - out.ar_coef));
    if (!(out.value > 0.0) || !std::isfinite(out.value)) {
        throw Error(ErrorKind::numeric, "long-run variance estimate is not positive");
    }
    return out;
}

LrcovEstimate long_run_covariance(const Eigen::MatrixXd& series, const LrvConfig& cfg) {
    check_length(series.rows());
    if (cfg.bandwidth && !(*cfg.bandwidth > 0.0)) {
        throw Error(ErrorKind::parameter, "fixed bandwidth must be positive");
    }
    const Eigen::MatrixXd x = series.rowwise() - series.colwise().mean();
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();

    LrcovEstimate out;
    Eigen::MatrixXd u = x;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    if (cfg.prewhiten) {
        const Eigen::MatrixXd lag = x.topRows(n - 1);
        const Eigen::MatrixXd lead = x.bottomRows(n - 1);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lag);
        qr.setThreshold(1e-10);
        if (qr.rank() == k) {
            a = qr.solve(lead).transpose();
            const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
            if (radius >= kMaxPrewhitenCoef) {
                a *= kMaxPrewhitenCoef / radius;
                out.clipped = true;
            }
        }
        u = lead - lag * a.transpose();
    }
    out.bandwidth = cfg.bandwidth ? *cfg.bandwidth : andrews_bandwidth(u);
    const Eigen::MatrixXd omega = kernel_sum(u, out.bandwidth);
    const Eigen::MatrixXd recolor = (Eigen::MatrixXd::Identity(k, k) - a).inverse();
    out.value = recolor * omega * recolor.transpose();
    if (!out.value.allFinite()) throw Error(ErrorKind::numeric, "long-run covariance is not finite");
    return out;
}

}  // namespace crbreak
