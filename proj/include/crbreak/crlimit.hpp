#pragma once

#include <cstdint>
#include <vector>

#include "crbreak/nuisance.hpp"
#include "crbreak/rng.hpp"

namespace crbreak {

/// Grid for the two-sided process V*(s) on [-a_neg, a_pos].
struct VStarSpec {
    double a_neg = 1.0;
    double a_pos = 1.0;
    double phi_z = 1.0;
    double phi_e = 1.0;
    double grid_step = 0.01;

    int n_neg() const;  // grid steps left of the origin
    int n_pos() const;
    void check() const;  // parameter error unless the invariants hold
};

/// Values of V* on the grid, index i corresponding to s = (i - n_neg) * step.
struct VStarPath {
    double step = 0.0;
    int n_neg = 0;
    std::vector<double> values;

    double s(std::size_t i) const noexcept {
        return (static_cast<double>(i) - static_cast<double>(n_neg)) * step;
    }
};

/// Simulates one path. The left branch consumes normals first, then the right.
VStarPath simulate_vstar_path(const VStarSpec& spec, Stream& rng);

/// Grid location of the maximum; ties go to the smallest |s|, then to s < 0.
double argmax_draw(const VStarPath& path);
int argmax_index(const VStarPath& path);  // signed grid offset from the origin

/// Same draw as argmax over simulate_vstar_path with the same stream, without
/// materializing the path.
int draw_argmax_offset(const VStarSpec& spec, Stream& rng);

/// Probability mass over consecutive dates lo..hi.
struct DateDistribution {
    int lo = 1;
    int hi = 0;
    std::vector<double> pmf;
    long n_draws = 0;  // 0 for analytic or posterior distributions

    int size() const noexcept { return static_cast<int>(pmf.size()); }
    int date(int i) const noexcept { return lo + i; }
    double mass(int t) const noexcept {
        return t < lo || t > hi ? 0.0 : pmf[static_cast<std::size_t>(t - lo)];
    }
    double mean() const;
    int median() const;  // smallest date with cdf >= 1/2
    int quantile(double p) const;  // smallest date with cdf >= p
    void check() const;

    static DateDistribution point_mass(int lo, int hi, int at);
    static DateDistribution uniform(int lo, int hi);
    static DateDistribution from_weights(int lo, std::vector<double> w, long n_draws = 0);
};

struct CrSimConfig {
    long n_draws = 10000;
    int grid_points = 2000;
    std::uint64_t seed = 20240601;
    int threads = 1;
    DomainScale scale = DomainScale::sample;
};

/// Grid of V* for the feasible limit at a given center. The domain of width
/// K spans the whole sample: s = K * (date - center) / T.
VStarSpec cr_domain(const LimitParams& params, int center, int T, int grid_points,
                    DomainScale scale = DomainScale::sample);
int steps_per_date(int T, int grid_points) noexcept;

/// Histogram over dates 1..T-1 of center + round(offset / steps_per_date)
/// for n_draws argmax draws, out-of-range dates clamped to the boundary.
/// Draw i uses the substream derive_seed(cfg.seed, {i}).
DateDistribution simulate_cr_distribution(const LimitParams& params, int center, int T,
                                          const CrSimConfig& cfg,
                                          std::vector<double>* s_star = nullptr);

enum class Smoothing { none, gaussian };

/// Density over the distribution's dates. Gaussian smoothing uses a
/// locally normalized kernel over the date lattice, then floors at 1e-12
/// and renormalizes so the result is strictly positive.
std::vector<double> density(const DateDistribution& dist, Smoothing kind = Smoothing::none,
                            double bandwidth = 1.0);

}  // namespace crbreak
