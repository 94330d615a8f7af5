#pragma once

#include "crbreak/lrv.hpp"
#include "crbreak/lsq.hpp"
#include "crbreak/model.hpp"

namespace crbreak {

enum class ErrorMode { iid, serial };

/// Width of the limit domain in argmax units. `sample` is T * rho_hat, which
/// puts the argmax on the per-observation scale; `literal` is theta_hat * rho_hat.
enum class DomainScale { sample, literal };

/// Plug-in quantities for the feasible limit distribution, computed on the
/// raw discrete data with the span normalized to one.
struct LimitParams {
    double lambda_hat = 0.0;
    int tb_hat = 0;
    int sample_size = 0;
    double phi_z = 1.0;
    double phi_e = 1.0;
    double rho_hat = 0.0;     // per-observation scale
    double theta_hat = 0.0;
    double sigma2_hat = 0.0;
    bool pooled_regime = false;  // a regime fell back to the pooled variance
    bool exact_fit = false;      // zero residuals; rho_hat is +inf

    double domain_scale(DomainScale kind = DomainScale::sample) const noexcept {
        return kind == DomainScale::sample ? static_cast<double>(sample_size) * rho_hat : theta_hat * rho_hat;
    }
};

/// Regime sums behind the plug-ins, exposed for diagnostics and tests.
struct RegimeMoments {
    double zz_pre = 0.0;   // mean (z'd)^2 over k <= tb
    double zz_post = 0.0;  // mean (z'd)^2 over k > tb
    double ez_pre = 0.0;   // mean e^2 (z'd)^2 over k <= tb
    double ez_post = 0.0;
    double e2_mean = 0.0;  // T^-1 sum e^2
};

RegimeMoments regime_moments(const Sample& sample, const SegmentedFit& fit);

LimitParams estimate_limit_params(const Sample& sample, const SegmentedFit& fit,
                                  ErrorMode mode = ErrorMode::iid, const LrvConfig& lrv = {});

inline LimitParams estimate_limit_params(const Sample& sample, const BreakFit& fit,
                                         ErrorMode mode = ErrorMode::iid,
                                         const LrvConfig& lrv = {}) {
    return estimate_limit_params(sample, fit.fit_at_tb, mode, lrv);
}

}  // namespace crbreak
