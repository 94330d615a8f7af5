#include "crbreak/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crbreak/errors.hpp"

namespace crbreak {

namespace {

constexpr double kTieTolerance = 1e-12;

void check_support(const std::vector<int>& dates, const std::vector<double>& pmf) {
    if (dates.empty() || dates.size() != pmf.size()) {
        throw Error(ErrorKind::dimension, "dates and pmf must be nonempty and of equal length");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] <= dates[i - 1]) throw Error(ErrorKind::validation, "support dates must increase");
    }
}

std::vector<int> support_of(const DateDistribution& dist) {
    std::vector<int> dates(dist.pmf.size());
    for (int i = 0; i < dist.size(); ++i) dates[static_cast<std::size_t>(i)] = dist.date(i);
    return dates;
}

int quantile_of(const std::vector<int>& dates, const std::vector<double>& pmf, double p) {
    double cdf = 0.0;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        cdf += pmf[i];
        if (cdf >= p - kTieTolerance) return dates[i];
    }
    return dates.back();
}

}  // namespace

Loss Loss::poly(double m) {
    if (!(m > 0.0)) throw Error(ErrorKind::parameter, "poly loss exponent must be positive");
    return {Kind::poly, m};
}

Loss Loss::check(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::parameter, "check loss tau must lie in (0, 1)");
    return {Kind::check, tau};
}

Loss Loss::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (head == "absolute" && colon == std::string::npos) return absolute();
    if (head == "squared" && colon == std::string::npos) return squared();
    if ((head == "poly" || head == "check") && colon != std::string::npos) {
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "bad loss parameter in '" + text + "'");
        }
        return head == "poly" ? poly(v) : check(v);
    }
    throw Error(ErrorKind::config, "unknown loss '" + text + "' (absolute, squared, poly:m, check:tau)");
}

std::string Loss::name() const {
    switch (kind) {
        case Kind::absolute: return "absolute";
        case Kind::squared: return "squared";
        case Kind::poly: return "poly:" + std::to_string(param);
        case Kind::check: return "check:" + std::to_string(param);
    }
    return "unknown";
}

double loss_eval(const Loss& loss, double r) {
    switch (loss.kind) {
        case Loss::Kind::absolute: return std::abs(r);
        case Loss::Kind::squared: return r * r;
        case Loss::Kind::poly: return std::pow(std::abs(r), loss.param);
        case Loss::Kind::check: return (loss.param - (r <= 0.0 ? 1.0 : 0.0)) * r;
    }
    return 0.0;
}

QuasiPosterior quasi_posterior(const std::vector<double>& q_profile, int lo,
                               const std::vector<double>& prior, PriorId id, double temperature) {
    if (q_profile.empty() || q_profile.size() != prior.size()) {
        throw Error(ErrorKind::dimension, "criterion profile and prior must have equal nonzero length");
    }
    if (!(temperature > 0.0)) throw Error(ErrorKind::parameter, "temperature must be positive");
    double qmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < prior.size(); ++i) {
        if (!(prior[i] >= 0.0) || !std::isfinite(prior[i])) {
            throw Error(ErrorKind::validation, "prior must be nonnegative and finite");
        }
        if (prior[i] > 0.0) qmax = std::max(qmax, q_profile[i]);
    }
    if (!std::isfinite(qmax)) throw Error(ErrorKind::numeric, "no date carries both finite criterion and prior mass");

    QuasiPosterior post;
    post.prior_id = id;
    post.log_weights.resize(prior.size());
    std::vector<double> w(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const double z = (q_profile[i] - qmax) / temperature;
        post.log_weights[i] = prior[i] > 0.0 ? z + std::log(prior[i]) : -std::numeric_limits<double>::infinity();
        w[i] = prior[i] > 0.0 ? std::exp(z) * prior[i] : 0.0;
    }
    post.dist = DateDistribution::from_weights(lo, std::move(w));
    return post;
}

double expected_risk(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss,
                     double s) {
    double r = 0.0;
    for (std::size_t i = 0; i < dates.size(); ++i) r += loss_eval(loss, s - dates[i]) * pmf[i];
    return r;
}

double expected_risk(const DateDistribution& dist, const Loss& loss, int s) {
    if (s < dist.lo || s > dist.hi) {
        throw Error(ErrorKind::validation, "date " + std::to_string(s) + " outside the distribution's range");
    }
    double r = 0.0;
    for (int i = 0; i < dist.size(); ++i) r += loss_eval(loss, s - dist.date(i)) * dist.pmf[static_cast<std::size_t>(i)];
    return r;
}

int gl_estimate(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss) {
    check_support(dates, pmf);
    int best = dates.front();
    double best_risk = expected_risk(dates, pmf, loss, best);
    for (std::size_t i = 1; i < dates.size(); ++i) {
        const double r = expected_risk(dates, pmf, loss, dates[i]);
        if (r < best_risk - kTieTolerance * std::max(1.0, std::abs(best_risk))) {
            best_risk = r;
            best = dates[i];
        }
    }
    return best;
}

int gl_estimate(const DateDistribution& dist, const Loss& loss) { return gl_estimate(support_of(dist), dist.pmf, loss); }

int gl_closed_form(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss) {
    check_support(dates, pmf);
    switch (loss.kind) {
        case Loss::Kind::absolute: return quantile_of(dates, pmf, 0.5);
        case Loss::Kind::check: return quantile_of(dates, pmf, 1.0 - loss.param);
        case Loss::Kind::squared: {
            double mean = 0.0;
            for (std::size_t i = 0; i < dates.size(); ++i) mean += pmf[i] * dates[i];
            int best = dates.front();
            double best_gap = std::abs(best - mean);
            for (int d : dates) {
                const double gap = std::abs(d - mean);
                if (gap < best_gap - kTieTolerance * std::max(1.0, std::abs(mean))) {
                    best_gap = gap;
                    best = d;
                }
            }
            return best;
        }
        case Loss::Kind::poly: return gl_estimate(dates, pmf, loss);
    }
    return dates.front();
}

int gl_closed_form(const DateDistribution& dist, const Loss& loss) {
    return gl_closed_form(support_of(dist), dist.pmf, loss);
}

LsStage ls_stage(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg) {
    LsStage out;
    out.fit = estimate_break(sample, spec);
    out.params = estimate_limit_params(sample, out.fit, cfg.error_mode, cfg.lrv);
    CrSimConfig sim = cfg.sim;
    sim.seed = derive_seed(cfg.sim.seed, {stage::cr_at_ls});
    out.cr = simulate_cr_distribution(out.params, out.fit.tb_hat, sample.size(), sim);
    return out;
}

std::vector<double> cr_prior(const LsStage& ls, const InferenceConfig& cfg) {
    const std::vector<double> smooth = density(ls.cr, Smoothing::gaussian, cfg.prior_bandwidth);
    std::vector<double> prior(static_cast<std::size_t>(ls.fit.range.count()));
    for (int i = 0; i < ls.fit.range.count(); ++i) {
        prior[static_cast<std::size_t>(i)] =
            smooth[static_cast<std::size_t>(ls.fit.range.lo + i - ls.cr.lo)];
    }
    return prior;
}

GlStage gl_stage(const BreakFit& fit, std::vector<double> prior, PriorId id, const InferenceConfig& cfg) {
    GlStage out;
    out.post = quasi_posterior(fit.q_profile, fit.range.lo, prior, id, cfg.temperature);
    out.prior = std::move(prior);
    out.estimate = gl_closed_form(out.post.dist, cfg.loss);
    return out;
}

IterStage iter_stage(const Sample& sample, int gl_date, const InferenceConfig& cfg) {
    IterStage out;
    out.params = estimate_limit_params(sample, fit_at(sample, gl_date), cfg.error_mode, cfg.lrv);
    CrSimConfig sim = cfg.sim;
    sim.seed = derive_seed(cfg.sim.seed, {stage::cr_at_gl});
    out.cr = simulate_cr_distribution(out.params, gl_date, sample.size(), sim);
    out.estimate = out.cr.median();
    return out;
}

int gl_cr_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg) {
    const LsStage ls = ls_stage(sample, spec, cfg);
    return gl_stage(ls.fit, cr_prior(ls, cfg), PriorId::cr, cfg).estimate;
}

int gl_uni_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg) {
    const BreakFit fit = estimate_break(sample, spec);
    return gl_stage(fit, std::vector<double>(static_cast<std::size_t>(fit.range.count()), 1.0),
                    PriorId::uniform, cfg)
        .estimate;
}

int gl_cr_iter_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg) {
    const LsStage ls = ls_stage(sample, spec, cfg);
    const GlStage gl = gl_stage(ls.fit, cr_prior(ls, cfg), PriorId::cr, cfg);
    return iter_stage(sample, gl.estimate, cfg).estimate;
}

}  // namespace crbreak
