#include "crbreak/lsq.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "crbreak/errors.hpp"

namespace crbreak {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Annihilator of the full-sample regressors, built once per sample.
class Annihilator {
public:
    explicit Annihilator(const Eigen::MatrixXd& x) : qr_(x) {
        qr_.setThreshold(kRankTolerance);
        if (qr_.rank() < x.cols()) {
            throw Error(ErrorKind::rank, "full-sample regressors [D Z] are collinear");
        }
        basis_ = qr_.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& v) const {
        return v - basis_ * (basis_.transpose() * v);
    }

private:
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    Eigen::MatrixXd basis_;
};

struct Partialled {
    bool ok = false;
    Eigen::MatrixXd r;        // M_X Z2
    Eigen::VectorXd delta;
    Eigen::VectorXd resid;    // M_X y - r delta
    double q = kNegInf;
    double ssr = kPosInf;
};

Partialled partial_fit(const Sample& s, const Annihilator& mx, const Eigen::VectorXd& my, int tb,
                       double z_scale) {
    Partialled out;
    out.r = mx.apply(s.z_post(tb));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(out.r);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < s.q() || qr.maxPivot() <= kRankTolerance * z_scale) return out;
    out.delta = qr.solve(my);
    const Eigen::VectorXd fitted = out.r * out.delta;
    out.resid = my - fitted;
    out.q = fitted.squaredNorm();
    out.ssr = out.resid.squaredNorm();
    out.ok = true;
    return out;
}

double z_scale(const Sample& s) { return std::max(1.0, s.z().norm()); }

}  // namespace

SegmentedFit fit_at(const Sample& sample, int tb) {
    const int T = sample.size();
    if (tb < 1 || tb > T - 1) {
        throw Error(ErrorKind::validation,
                    "break date " + std::to_string(tb) + " outside [1, " + std::to_string(T - 1) + "]");
    }
    const int k = sample.p() + sample.q();
    Eigen::MatrixXd w(T, k + sample.q());
    w << sample.x(), sample.z_post(tb);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < w.cols()) {
        throw Error(ErrorKind::rank, "regressors [X, Z2] are rank deficient at date " + std::to_string(tb));
    }
    const Eigen::VectorXd coef = qr.solve(sample.y());

    SegmentedFit fit;
    fit.tb = tb;
    fit.beta_hat = coef.head(k);
    fit.delta_hat = coef.tail(sample.q());
    fit.residuals = sample.y() - w * coef;
    fit.ssr = fit.residuals.squaredNorm();
    const Annihilator mx(sample.x());
    fit.criterion_q = (mx.apply(sample.z_post(tb)) * fit.delta_hat).squaredNorm();
    return fit;
}

BreakFit estimate_break(const Sample& sample, const BreakSpec& spec) {
    BreakFit out;
    out.range = validate(sample, spec);
    const Annihilator mx(sample.x());
    const Eigen::VectorXd my = mx.apply(sample.y());
    const double scale = z_scale(sample);

    out.q_profile.assign(out.range.count(), kNegInf);
    out.ssr_profile.assign(out.range.count(), kPosInf);
    int best = -1;
    for (int i = 0; i < out.range.count(); ++i) {
        const Partialled pf = partial_fit(sample, mx, my, out.range.lo + i, scale);
        if (!pf.ok) continue;
        out.q_profile[i] = pf.q;
        out.ssr_profile[i] = pf.ssr;
        if (best < 0 || pf.q > out.q_profile[best]) best = i;
    }
    if (best < 0) {
        throw Error(ErrorKind::rank, "every candidate date in [" + std::to_string(out.range.lo) + ", " +
                                         std::to_string(out.range.hi) + "] is rank deficient");
    }
    out.tb_hat = out.range.lo + best;
    out.fit_at_tb = fit_at(sample, out.tb_hat);
    return out;
}

CriticalValueTable CriticalValueTable::defaults() {
    CriticalValueTable t;
    t.set(1, 0.15, 8.73);
    t.set(2, 0.15, 11.72);
    t.set(3, 0.15, 14.19);
    return t;
}

std::pair<int, long> CriticalValueTable::key(int q, double trimming) {
    return {q, std::lround(trimming * 1e6)};
}

void CriticalValueTable::set(int q, double trimming, double value) { values_[key(q, trimming)] = value; }

bool CriticalValueTable::contains(int q, double trimming) const {
    return values_.count(key(q, trimming)) > 0;
}

double CriticalValueTable::lookup(int q, double trimming) const {
    auto it = values_.find(key(q, trimming));
    if (it == values_.end()) {
        throw Error(ErrorKind::config, "no sup-Wald critical value for q = " + std::to_string(q) +
                                           ", trimming = " + std::to_string(trimming));
    }
    return it->second;
}

SupWaldResult sup_wald(const Sample& sample, double trimming, VarianceMode mode,
                       const CriticalValueTable& table, const LrvConfig& lrv) {
    if (!(trimming > 0.0 && trimming < 0.5)) {
        throw Error(ErrorKind::validation, "sup-Wald trimming must lie in (0, 0.5), got " +
                                               std::to_string(trimming));
    }
    SupWaldResult out;
    out.critical_value = table.lookup(sample.q(), trimming);
    BreakSpec spec;
    spec.trimming = trimming;
    out.range = validate(sample, spec);

    const int T = sample.size();
    const int dof = T - sample.p() - 2 * sample.q();
    const Annihilator mx(sample.x());
    const Eigen::VectorXd my = mx.apply(sample.y());
    const double scale = z_scale(sample);

    out.profile.assign(out.range.count(), kNegInf);
    int best = -1;
    for (int i = 0; i < out.range.count(); ++i) {
        const int tb = out.range.lo + i;
        const Partialled pf = partial_fit(sample, mx, my, tb, scale);
        if (!pf.ok) continue;
        double w = kNegInf;
        if (mode == VarianceMode::homoskedastic) {
            const double s2 = pf.ssr / static_cast<double>(dof);
            if (!(s2 > 0.0)) continue;
            w = pf.q / s2;
        } else {
            const Eigen::MatrixXd rtr_inv = (pf.r.transpose() * pf.r).inverse();
            const Eigen::MatrixXd g = pf.r.array().colwise() * pf.resid.array();
            const Eigen::MatrixXd omega = long_run_covariance(g, lrv).value;
            const Eigen::MatrixXd v = rtr_inv * (static_cast<double>(T) * omega) * rtr_inv;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
            if (ldlt.info() != Eigen::Success) continue;
            w = pf.delta.dot(ldlt.solve(pf.delta));
        }
        if (!std::isfinite(w)) continue;
        out.profile[i] = w;
        if (best < 0 || w > out.profile[best]) best = i;
    }
    if (best < 0) throw Error(ErrorKind::numeric, "sup-Wald statistic undefined at every trimmed date");
    out.statistic = out.profile[best];
    out.argmax_date = out.range.lo + best;
    out.reject = out.statistic > out.critical_value;
    return out;
}

}  // namespace crbreak
