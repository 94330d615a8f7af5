#include "crbreak/hdr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

#include "crbreak/errors.hpp"
#include "crbreak/parallel.hpp"

namespace crbreak {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kBucketWidth = 0.05;
const long kBucketLimit = std::lround(std::log(20.0) / kBucketWidth);

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::parameter, "alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

ConfidenceSet from_dates(std::vector<int> dates, double level, double kappa, double mass, const std::string& method) {
    ConfidenceSet set;
    std::sort(dates.begin(), dates.end());
    set.level = level;
    set.kappa = kappa;
    set.intervals = runs_of(dates);
    set.dates = std::move(dates);
    set.achieved_mass = mass;
    set.method = method;
    return set;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double type1_quantile(std::vector<double> sorted, double p) {
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n - 1e-9)));
    return sorted[std::min(sorted.size(), k) - 1];
}

}  // namespace

bool ConfidenceSet::contains(int t) const { return std::binary_search(dates.begin(), dates.end(), t); }

std::vector<std::pair<int, int>> runs_of(const std::vector<int>& sorted_dates) {
    std::vector<std::pair<int, int>> runs;
    for (int d : sorted_dates) {
        if (!runs.empty() && d == runs.back().second + 1) {
            runs.back().second = d;
        } else {
            runs.emplace_back(d, d);
        }
    }
    return runs;
}

ConfidenceSet hdr_set(const DateDistribution& dist, double alpha, const std::string& method) {
    check_alpha(alpha);
    if (dist.pmf.empty()) throw Error(ErrorKind::dimension, "empty distribution");
    std::vector<int> order(dist.pmf.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dist.pmf[static_cast<std::size_t>(a)] > dist.pmf[static_cast<std::size_t>(b)];
    });

    const double target = 1.0 - alpha;
    double cum = 0.0;
    std::size_t taken = 0;
    while (taken < order.size() && cum < target - kMassTolerance) {
        cum += dist.pmf[static_cast<std::size_t>(order[taken])];
        ++taken;
    }
    taken = std::max<std::size_t>(taken, 1);
    const double kappa = dist.pmf[static_cast<std::size_t>(order[taken - 1])];
    while (taken < order.size() && dist.pmf[static_cast<std::size_t>(order[taken])] == kappa) ++taken;

    std::vector<int> dates;
    double mass = 0.0;
    for (std::size_t i = 0; i < taken; ++i) {
        dates.push_back(dist.date(order[i]));
        mass += dist.pmf[static_cast<std::size_t>(order[i])];
    }
    return from_dates(std::move(dates), target, kappa, mass, method);
}

ConfidenceSet confset_ols_cr(const LsStage& ls, double alpha) { return hdr_set(ls.cr, alpha, "ols_cr"); }

ConfidenceSet confset_ols_cr(const Sample& sample, const BreakSpec& spec, double alpha,
                             const InferenceConfig& cfg) {
    check_alpha(alpha);
    return confset_ols_cr(ls_stage(sample, spec, cfg), alpha);
}

DateDistribution gl_sampling_distribution(const LimitParams& params, int center, int T, const Loss& loss,
                                          int prior_lo, const std::vector<double>& prior, long n_outer,
                                          const CrSimConfig& cfg) {
    if (n_outer < 1) throw Error(ErrorKind::parameter, "n_outer must be positive");
    if (prior.empty()) throw Error(ErrorKind::dimension, "empty prior");
    if (params.exact_fit || std::isinf(params.rho_hat)) {
        DateDistribution d = DateDistribution::point_mass(1, T - 1, center);
        d.n_draws = n_outer;
        return d;
    }
    const VStarSpec spec = cr_domain(params, center, T, cfg.grid_points, cfg.scale);
    spec.check();
    const int m = steps_per_date(T, cfg.grid_points);
    const int n_neg = spec.n_neg();
    const int n_grid = n_neg + spec.n_pos() + 1;

    // Date and prior weight of every grid point.
    std::vector<int> grid_date(static_cast<std::size_t>(n_grid));
    std::vector<double> grid_prior(static_cast<std::size_t>(n_grid));
    for (int k = 0; k < n_grid; ++k) {
        const long date = std::clamp<long>(center + std::lround(static_cast<double>(k - n_neg) / m), 1, T - 1);
        grid_date[static_cast<std::size_t>(k)] = static_cast<int>(date);
        const long idx = date - prior_lo;
        grid_prior[static_cast<std::size_t>(k)] =
            idx >= 0 && idx < static_cast<long>(prior.size()) ? prior[static_cast<std::size_t>(idx)] : 0.0;
    }

    std::vector<int> dates(static_cast<std::size_t>(T - 1));
    std::iota(dates.begin(), dates.end(), 1);
    std::vector<int> minimizers(static_cast<std::size_t>(n_outer));
    parallel_for(minimizers.size(), cfg.threads, [&](std::size_t i) {
        Stream rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)}));
        const VStarPath path = simulate_vstar_path(spec, rng);
        double vmax = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < n_grid; ++k) {
            if (grid_prior[static_cast<std::size_t>(k)] > 0.0) vmax = std::max(vmax, path.values[static_cast<std::size_t>(k)]);
        }
        if (!std::isfinite(vmax)) throw Error(ErrorKind::numeric, "prior puts no mass on the simulation domain");
        std::vector<double> w(static_cast<std::size_t>(T - 1), 0.0);
        for (int k = 0; k < n_grid; ++k) {
            const double p = grid_prior[static_cast<std::size_t>(k)];
            if (p > 0.0) {
                w[static_cast<std::size_t>(grid_date[static_cast<std::size_t>(k)] - 1)] +=
                    std::exp(path.values[static_cast<std::size_t>(k)] - vmax) * p;
            }
        }
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        if (!(total > 0.0)) throw Error(ErrorKind::numeric, "degenerate quasi-posterior weights");
        for (double& v : w) v /= total;
        minimizers[i] = gl_closed_form(dates, w, loss);
    });

    std::vector<double> counts(static_cast<std::size_t>(T - 1), 0.0);
    for (int d : minimizers) counts[static_cast<std::size_t>(d - 1)] += 1.0;
    return DateDistribution::from_weights(1, std::move(counts), n_outer);
}

ConfidenceSet confset_gl_cr(const LsStage& ls, const GlStage& gl, int T, double alpha,
                            const InferenceConfig& cfg) {
    check_alpha(alpha);
    CrSimConfig sim = cfg.sim;
    sim.seed = derive_seed(cfg.sim.seed, {stage::gl_sampling});
    const DateDistribution dist = gl_sampling_distribution(ls.params, gl.estimate, T, cfg.loss, ls.fit.range.lo,
                                                           gl.prior, cfg.n_outer, sim);
    return hdr_set(dist, alpha, "gl_cr");
}

ConfidenceSet confset_gl_cr(const Sample& sample, const BreakSpec& spec, double alpha,
                            const InferenceConfig& cfg) {
    const LsStage ls = ls_stage(sample, spec, cfg);
    const GlStage gl = gl_stage(ls.fit, cr_prior(ls, cfg), PriorId::cr, cfg);
    return confset_gl_cr(ls, gl, sample.size(), alpha, cfg);
}

ConfidenceSet confset_gl_cr_iter(const IterStage& iter, double alpha) {
    return hdr_set(iter.cr, alpha, "gl_cr_iter");
}

ConfidenceSet confset_gl_cr_iter(const Sample& sample, const BreakSpec& spec, double alpha,
                                 const InferenceConfig& cfg) {
    check_alpha(alpha);
    const LsStage ls = ls_stage(sample, spec, cfg);
    const GlStage gl = gl_stage(ls.fit, cr_prior(ls, cfg), PriorId::cr, cfg);
    return confset_gl_cr_iter(iter_stage(sample, gl.estimate, cfg), alpha);
}

std::pair<double, double> argmax_quantiles(double phi_z, double phi_e, double alpha,
                                           const ArgmaxQuantileConfig& cfg) {
    check_alpha(alpha);
    if (!(phi_z > 0.0) || !(phi_e > 0.0)) throw Error(ErrorKind::parameter, "ratios must be positive");
    if (cfg.n_draws < 1 || !(cfg.grid_step > 0.0) || !(cfg.half_width > cfg.grid_step)) {
        throw Error(ErrorKind::parameter, "invalid argmax quantile configuration");
    }
    const long bz = std::clamp(std::lround(std::log(phi_z) / kBucketWidth), -kBucketLimit, kBucketLimit);
    const long be = std::clamp(std::lround(std::log(phi_e) / kBucketWidth), -kBucketLimit, kBucketLimit);
    using Key = std::tuple<long, long, long, long, double, double, std::uint64_t>;
    const Key key{bz, be, std::lround(alpha * 1e9), cfg.n_draws, cfg.grid_step, cfg.half_width, cfg.seed};

    static std::mutex mutex;
    static std::map<Key, std::pair<double, double>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    VStarSpec spec;
    spec.phi_z = std::exp(bz * kBucketWidth);
    spec.phi_e = std::exp(be * kBucketWidth);
    // Right-branch argmax scales with phi_e / phi_z^2.
    const double r = spec.phi_e / (spec.phi_z * spec.phi_z);
    spec.grid_step = cfg.grid_step * std::min(1.0, r);
    spec.a_neg = std::ceil(cfg.half_width / spec.grid_step) * spec.grid_step;
    spec.a_pos = std::ceil(cfg.half_width * std::max(1.0, r) / spec.grid_step) * spec.grid_step;

    std::vector<double> draws(static_cast<std::size_t>(cfg.n_draws));
    const std::uint64_t seed = derive_seed(cfg.seed, {stage::bai_quantiles, static_cast<std::uint64_t>(bz + 1000),
                                                      static_cast<std::uint64_t>(be + 1000)});
    parallel_for(draws.size(), cfg.threads, [&](std::size_t i) {
        Stream rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        draws[i] = draw_argmax_offset(spec, rng) * spec.grid_step;
    });
    std::sort(draws.begin(), draws.end());
    const std::pair<double, double> q{type1_quantile(draws, alpha / 2.0), type1_quantile(draws, 1.0 - alpha / 2.0)};
    cache.emplace(key, q);
    return q;
}

ConfidenceSet bai_interval(const Sample& sample, const BreakFit& fit, const LimitParams& params, double alpha,
                           const ArgmaxQuantileConfig& cfg) {
    check_alpha(alpha);
    const int T = sample.size();
    const int tb = fit.tb_hat;
    int lo = tb;
    int hi = tb;
    if (!params.exact_fit && std::isfinite(params.rho_hat)) {
        if (!(params.rho_hat > 0.0)) throw Error(ErrorKind::numeric, "nonpositive scale in the long-span interval");
        const auto [q_lo, q_hi] = argmax_quantiles(params.phi_z, params.phi_e, alpha, cfg);
        const double reach_lo = std::ceil(std::max(0.0, q_hi) / params.rho_hat);
        const double reach_hi = std::ceil(std::max(0.0, -q_lo) / params.rho_hat);
        lo = static_cast<int>(std::max<double>(1.0, tb - reach_lo));
        hi = static_cast<int>(std::min<double>(T - 1.0, tb + reach_hi));
    }
    std::vector<int> dates;
    for (int t = lo; t <= hi; ++t) dates.push_back(t);
    return from_dates(std::move(dates), 1.0 - alpha, 0.0, 1.0 - alpha, "bai");
}

void write_confidence_sets(std::ostream& out, const std::vector<ConfidenceSet>& sets, bool header) {
    if (header) out << "method,level,kappa,interval_lo,interval_hi\n";
    for (const auto& set : sets) {
        for (const auto& [lo, hi] : set.intervals) {
            out << set.method << ',' << format_number(set.level) << ',' << format_number(set.kappa) << ',' << lo
                << ',' << hi << '\n';
        }
    }
}

}  // namespace crbreak
