#pragma once

#include <optional>

#include <Eigen/Dense>

namespace crbreak {

/// Quadratic-spectral kernel HAC estimation with optional AR(1) (VAR(1) for
/// vector series) prewhitening and Andrews' AR(1) plug-in bandwidth.
struct LrvConfig {
    bool prewhiten = true;
    std::optional<double> bandwidth;  // automatic when unset
};

struct LrvEstimate {
    double value = 0.0;
    double ar_coef = 0.0;    // prewhitening coefficient actually used
    double bandwidth = 0.0;
    bool clipped = false;    // |a| hit the 0.97 guard
};

struct LrcovEstimate {
    Eigen::MatrixXd value;
    double bandwidth = 0.0;
    bool clipped = false;
};

inline constexpr double kMaxPrewhitenCoef = 0.97;

/// Quadratic-spectral kernel weight k(x).
double qs_kernel(double x) noexcept;

/// Long-run variance (2*pi times the spectral density at frequency zero) of a
/// scalar series. The series is demeaned internally.
LrvEstimate long_run_variance(const Eigen::VectorXd& series, const LrvConfig& cfg = {});

/// Long-run covariance of the rows of a T x k matrix, demeaned by column.
LrcovEstimate long_run_covariance(const Eigen::MatrixXd& series, const LrvConfig& cfg = {});

}  // namespace crbreak
