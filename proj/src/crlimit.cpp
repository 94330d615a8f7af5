#include "crbreak/crlimit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crbreak/errors.hpp"
#include "crbreak/parallel.hpp"

namespace crbreak {

namespace {

constexpr double kCdfTolerance = 1e-12;

int grid_count(double a, double step) { return static_cast<int>(std::lround(a / step)); }

}  // namespace

int VStarSpec::n_neg() const { return grid_count(a_neg, grid_step); }
int VStarSpec::n_pos() const { return grid_count(a_pos, grid_step); }

void VStarSpec::check() const {
    if (!(grid_step > 0.0) || !std::isfinite(grid_step)) {
        throw Error(ErrorKind::parameter, "grid step must be positive and finite");
    }
    if (!(a_neg >= grid_step * (1 - 1e-9)) || !(a_pos >= grid_step * (1 - 1e-9)) ||
        !std::isfinite(a_neg) || !std::isfinite(a_pos)) {
        throw Error(ErrorKind::parameter, "domain bounds must be at least one grid step, got [" +
                                              std::to_string(-a_neg) + ", " + std::to_string(a_pos) + "]");
    }
    for (double a : {a_neg, a_pos}) {
        const double ratio = a / grid_step;
        if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio)) {
            throw Error(ErrorKind::parameter, "grid step does not divide the domain bound " + std::to_string(a));
        }
    }
    if (!(phi_z > 0.0) || !(phi_e > 0.0) || !std::isfinite(phi_z) || !std::isfinite(phi_e)) {
        throw Error(ErrorKind::parameter, "phi_z and phi_e must be positive and finite");
    }
}

VStarPath simulate_vstar_path(const VStarSpec& spec, Stream& rng) {
    spec.check();
    VStarPath path;
    path.step = spec.grid_step;
    path.n_neg = spec.n_neg();
    const int n_pos = spec.n_pos();
    path.values.assign(static_cast<std::size_t>(path.n_neg + n_pos + 1), 0.0);

    const double sd_left = std::sqrt(spec.grid_step);
    const double sd_right = std::sqrt(spec.phi_e) * sd_left;
    double w = 0.0;
    for (int j = 1; j <= path.n_neg; ++j) {
        w += sd_left * rng.normal();
        path.values[static_cast<std::size_t>(path.n_neg - j)] = -0.5 * (j * spec.grid_step) + w;
    }
    w = 0.0;
    for (int j = 1; j <= n_pos; ++j) {
        w += sd_right * rng.normal();
        path.values[static_cast<std::size_t>(path.n_neg + j)] =
            -0.5 * spec.phi_z * (j * spec.grid_step) + w;
    }
    return path;
}

int argmax_index(const VStarPath& path) {
    if (path.values.empty()) throw Error(ErrorKind::parameter, "empty path");
    const int n_neg = path.n_neg;
    const int n_pos = static_cast<int>(path.values.size()) - n_neg - 1;
    int best = 0;
    double best_value = path.values[static_cast<std::size_t>(n_neg)];
    for (int k = 1; k <= std::max(n_neg, n_pos); ++k) {
        if (k <= n_neg) {
            const double v = path.values[static_cast<std::size_t>(n_neg - k)];
            if (v > best_value) {
                best_value = v;
                best = -k;
            }
        }
        if (k <= n_pos) {
            const double v = path.values[static_cast<std::size_t>(n_neg + k)];
            if (v > best_value) {
                best_value = v;
                best = k;
            }
        }
    }
    return best;
}

double argmax_draw(const VStarPath& path) { return argmax_index(path) * path.step; }

int draw_argmax_offset(const VStarSpec& spec, Stream& rng) {
    const int n_neg = spec.n_neg();
    const int n_pos = spec.n_pos();
    const double sd_left = std::sqrt(spec.grid_step);
    const double sd_right = std::sqrt(spec.phi_e) * sd_left;

    int best_left = 0;
    double max_left = 0.0;
    double w = 0.0;
    for (int j = 1; j <= n_neg; ++j) {
        w += sd_left * rng.normal();
        const double v = -0.5 * (j * spec.grid_step) + w;
        if (v > max_left) {
            max_left = v;
            best_left = j;
        }
    }
    int best_right = 0;
    double max_right = 0.0;
    w = 0.0;
    for (int j = 1; j <= n_pos; ++j) {
        w += sd_right * rng.normal();
        const double v = -0.5 * spec.phi_z * (j * spec.grid_step) + w;
        if (v > max_right) {
            max_right = v;
            best_right = j;
        }
    }
    if (max_right > max_left) return best_right;
    if (max_right < max_left) return -best_left;
    return best_right < best_left ? best_right : -best_left;
}

double DateDistribution::mean() const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) m += pmf[static_cast<std::size_t>(i)] * date(i);
    return m;
}

int DateDistribution::quantile(double p) const {
    double cdf = 0.0;
    for (int i = 0; i < size(); ++i) {
        cdf += pmf[static_cast<std::size_t>(i)];
        if (cdf >= p - kCdfTolerance) return date(i);
    }
    return hi;
}

int DateDistribution::median() const { return quantile(0.5); }

void DateDistribution::check() const {
    if (hi < lo || size() != hi - lo + 1) {
        throw Error(ErrorKind::dimension, "distribution support does not match its pmf length");
    }
    double total = 0.0;
    for (double v : pmf) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::validation, "negative or non-finite mass");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorKind::validation, "pmf sums to " + std::to_string(total));
    }
}

DateDistribution DateDistribution::point_mass(int lo, int hi, int at) {
    DateDistribution d;
    d.lo = lo;
    d.hi = hi;
    d.pmf.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    d.pmf[static_cast<std::size_t>(std::clamp(at, lo, hi) - lo)] = 1.0;
    return d;
}

DateDistribution DateDistribution::uniform(int lo, int hi) {
    return from_weights(lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 1.0));
}

DateDistribution DateDistribution::from_weights(int lo, std::vector<double> w, long n_draws) {
    if (w.empty()) throw Error(ErrorKind::dimension, "empty weight vector");
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::numeric, "negative or non-finite weight");
        total += v;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::numeric, "weights sum to zero");
    for (double& v : w) v /= total;
    DateDistribution d;
    d.lo = lo;
    d.hi = lo + static_cast<int>(w.size()) - 1;
    d.pmf = std::move(w);
    d.n_draws = n_draws;
    return d;
}

int steps_per_date(int T, int grid_points) noexcept {
    return std::max(1, (grid_points + T - 1) / std::max(1, T));
}

VStarSpec cr_domain(const LimitParams& params, int center, int T, int grid_points, DomainScale scale) {
    if (T < 2 || center < 1 || center > T - 1) {
        throw Error(ErrorKind::parameter, "center " + std::to_string(center) + " outside [1, T-1]");
    }
    LimitParams p = params;
    p.sample_size = T;
    const double K = p.domain_scale(scale);
    if (!(K > 0.0) || !std::isfinite(K)) {
        throw Error(ErrorKind::parameter, "domain scale must be positive and finite");
    }
    const int m = steps_per_date(T, grid_points);
    VStarSpec spec;
    spec.grid_step = K / (static_cast<double>(T) * m);
    spec.a_neg = spec.grid_step * (m * center);
    spec.a_pos = spec.grid_step * (m * (T - center));
    spec.phi_z = params.phi_z;
    spec.phi_e = params.phi_e;
    return spec;
}

DateDistribution simulate_cr_distribution(const LimitParams& params, int center, int T,
                                          const CrSimConfig& cfg, std::vector<double>* s_star) {
    if (cfg.n_draws < 1) throw Error(ErrorKind::parameter, "n_draws must be positive");
    if (T < 2 || center < 1 || center > T - 1) {
        throw Error(ErrorKind::parameter, "center " + std::to_string(center) + " outside [1, T-1]");
    }
    if (params.exact_fit || std::isinf(params.rho_hat)) {
        DateDistribution d = DateDistribution::point_mass(1, T - 1, center);
        d.n_draws = cfg.n_draws;
        if (s_star) s_star->assign(static_cast<std::size_t>(cfg.n_draws), 0.0);
        return d;
    }
    const VStarSpec spec = cr_domain(params, center, T, cfg.grid_points, cfg.scale);
    spec.check();
    const int m = steps_per_date(T, cfg.grid_points);

    std::vector<int> offsets(static_cast<std::size_t>(cfg.n_draws));
    parallel_for(offsets.size(), cfg.threads, [&](std::size_t i) {
        Stream rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)}));
        offsets[i] = draw_argmax_offset(spec, rng);
    });

    std::vector<double> counts(static_cast<std::size_t>(T - 1), 0.0);
    for (int off : offsets) {
        const long date = center + std::lround(static_cast<double>(off) / m);
        counts[static_cast<std::size_t>(std::clamp<long>(date, 1, T - 1) - 1)] += 1.0;
    }
    if (s_star) {
        s_star->resize(offsets.size());
        for (std::size_t i = 0; i < offsets.size(); ++i) (*s_star)[i] = offsets[i] * spec.grid_step;
    }
    return DateDistribution::from_weights(1, std::move(counts), cfg.n_draws);
}

std::vector<double> density(const DateDistribution& dist, Smoothing kind, double bandwidth) {
    if (kind == Smoothing::none) return dist.pmf;
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw Error(ErrorKind::parameter, "smoothing bandwidth must be positive, got " + std::to_string(bandwidth));
    }
    const int n = dist.size();
    const int reach = static_cast<int>(std::ceil(8.0 * bandwidth));
    std::vector<double> kernel(static_cast<std::size_t>(reach + 1));
    for (int d = 0; d <= reach; ++d) kernel[static_cast<std::size_t>(d)] = std::exp(-0.5 * d * d / (bandwidth * bandwidth));

    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) {
        double num = 0.0;
        double den = 0.0;
        for (int u = std::max(0, t - reach); u <= std::min(n - 1, t + reach); ++u) {
            const double k = kernel[static_cast<std::size_t>(std::abs(t - u))];
            num += k * dist.pmf[static_cast<std::size_t>(u)];
            den += k;
        }
        out[static_cast<std::size_t>(t)] = num / den;
    }
    auto normalize = [&] {
        const double total = std::accumulate(out.begin(), out.end(), 0.0);
        for (double& v : out) v /= total;
    };
    normalize();
    for (double& v : out) v = std::max(v, 1e-12);
    normalize();
    return out;
}

}  // namespace crbreak
