#include "crbreak/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crbreak/errors.hpp"

namespace crbreak {

RegimeMoments regime_moments(const Sample& sample, const SegmentedFit& fit) {
    const int T = sample.size();
    const int tb = fit.tb;
    const Eigen::VectorXd zd = sample.z() * fit.delta_hat;
    const Eigen::ArrayXd zd2 = zd.array().square();
    const Eigen::ArrayXd e2 = fit.residuals.array().square();

    RegimeMoments m;
    m.zz_pre = zd2.head(tb).mean();
    m.zz_post = zd2.tail(T - tb).mean();
    m.ez_pre = (e2.head(tb) * zd2.head(tb)).mean();
    m.ez_post = (e2.tail(T - tb) * zd2.tail(T - tb)).mean();
    m.e2_mean = e2.mean();
    return m;
}

LimitParams estimate_limit_params(const Sample& sample, const SegmentedFit& fit, ErrorMode mode,
                                  const LrvConfig& lrv) {
    const int T = sample.size();
    const int tb = fit.tb;
    if (tb < 1 || tb > T - 1) {
        throw Error(ErrorKind::validation, "break date " + std::to_string(tb) + " outside [1, T-1]");
    }
    if (fit.delta_hat.size() != sample.q() || fit.residuals.size() != T) {
        throw Error(ErrorKind::dimension, "fit does not belong to this sample");
    }
    const double dnorm2 = fit.delta_hat.squaredNorm();
    if (!(dnorm2 > 0.0)) throw Error(ErrorKind::degenerate, "estimated shift is zero");

    RegimeMoments m = regime_moments(sample, fit);
    if (!(m.zz_pre > 0.0) || !(m.zz_post > 0.0)) {
        throw Error(ErrorKind::numeric, "shift-weighted regressor moment is zero in a regime at date " +
                                            std::to_string(tb));
    }

    LimitParams out;
    out.tb_hat = tb;
    out.sample_size = T;
    out.lambda_hat = static_cast<double>(tb) / static_cast<double>(T);

    if (m.e2_mean <= 1e-30 * std::max(1.0, sample.y().squaredNorm() / T)) {
        // Exact fit: the limit law collapses to a point mass at tb.
        out.rho_hat = std::numeric_limits<double>::infinity();
        out.theta_hat = out.rho_hat;
        out.phi_z = m.zz_post / m.zz_pre;
        out.exact_fit = true;
        return out;
    }

    double scale = 1.0;
    if (mode == ErrorMode::serial) {
        // Common long-run correction of the residual-weighted sums.
        const Eigen::VectorXd w =
            ((sample.z() * fit.delta_hat).array() * fit.residuals.array()).matrix();
        const double mean_w2 = w.squaredNorm() / static_cast<double>(T);
        if (mean_w2 > 0.0) scale = long_run_variance(w, lrv).value / mean_w2;
        out.sigma2_hat = long_run_variance(fit.residuals, lrv).value;
    } else {
        out.sigma2_hat = m.e2_mean;
    }
    m.ez_pre *= scale;
    m.ez_post *= scale;

    // A regime too short to leave residual variation borrows the pooled variance.
    const int min_obs = sample.q() + 1;
    const double pooled = scale * m.e2_mean;
    if (tb < min_obs || !(m.ez_pre > 0.0)) {
        m.ez_pre = pooled * m.zz_pre;
        out.pooled_regime = true;
    }
    if (T - tb < min_obs || !(m.ez_post > 0.0)) {
        m.ez_post = pooled * m.zz_post;
        out.pooled_regime = true;
    }
    if (!(m.ez_pre > 0.0) || !(m.ez_post > 0.0) || !(out.sigma2_hat > 0.0)) {
        throw Error(ErrorKind::numeric, "residual-weighted moment is not positive at date " +
                                            std::to_string(tb));
    }

    out.phi_z = m.zz_post / m.zz_pre;
    out.phi_e = m.ez_post / m.ez_pre;
    const double ratio = m.zz_pre * m.zz_pre / m.ez_pre;
    out.rho_hat = ratio;
    out.theta_hat = out.rho_hat * dnorm2 / m.e2_mean * ratio;
    if (!std::isfinite(out.phi_z) || !std::isfinite(out.phi_e) || !std::isfinite(out.rho_hat) ||
        !std::isfinite(out.theta_hat)) {
        throw Error(ErrorKind::numeric, "non-finite plug-in at date " + std::to_string(tb));
    }
    return out;
}

}  // namespace crbreak
