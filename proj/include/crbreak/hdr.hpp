#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "crbreak/crlimit.hpp"
#include "crbreak/laplace.hpp"

namespace crbreak {

struct ConfidenceSet {
    double level = 0.95;
    double kappa = 0.0;
    std::vector<int> dates;                     // sorted members
    std::vector<std::pair<int, int>> intervals;  // maximal runs of consecutive members
    double achieved_mass = 0.0;
    std::string method = "custom";

    bool contains(int t) const;
    int length() const noexcept { return static_cast<int>(dates.size()); }
};

/// Groups sorted dates into maximal runs.
std::vector<std::pair<int, int>> runs_of(const std::vector<int>& sorted_dates);

/// Highest-density set: dates ranked by mass are added until the cumulative
/// mass reaches 1 - alpha; every date tied with the last one is kept.
ConfidenceSet hdr_set(const DateDistribution& dist, double alpha, const std::string& method = "custom");

ConfidenceSet confset_ols_cr(const LsStage& ls, double alpha);
ConfidenceSet confset_ols_cr(const Sample& sample, const BreakSpec& spec, double alpha,
                             const InferenceConfig& cfg);

/// Distribution of the GL minimizer over outer draws of the limit process
/// centered at `center`, each draw weighting the grid by exp(V) times the
/// prior of the mapped date. Prior covers prior_lo, prior_lo+1, ...
DateDistribution gl_sampling_distribution(const LimitParams& params, int center, int T, const Loss& loss,
                                          int prior_lo, const std::vector<double>& prior, long n_outer,
                                          const CrSimConfig& cfg);

ConfidenceSet confset_gl_cr(const LsStage& ls, const GlStage& gl, int T, double alpha,
                            const InferenceConfig& cfg);
ConfidenceSet confset_gl_cr(const Sample& sample, const BreakSpec& spec, double alpha,
                            const InferenceConfig& cfg);

ConfidenceSet confset_gl_cr_iter(const IterStage& iter, double alpha);
ConfidenceSet confset_gl_cr_iter(const Sample& sample, const BreakSpec& spec, double alpha,
                                 const InferenceConfig& cfg);

struct ArgmaxQuantileConfig {
    long n_draws = 20000;
    double half_width = 60.0;  // domain half-width in units of the left branch scale
    double grid_step = 0.05;
    std::uint64_t seed = 0xBA1;
    int threads = 1;
};

/// (lower, upper) = (alpha/2, 1 - alpha/2) quantiles of argmax V* for the
/// given ratios. Log ratios are bucketed to 0.05 and clamped to [1/20, 20];
/// results are cached per process.
std::pair<double, double> argmax_quantiles(double phi_z, double phi_e, double alpha,
                                           const ArgmaxQuantileConfig& cfg = {});

/// Long-span interval [tb - ceil(q_hi / rho), tb + ceil(-q_lo / rho)],
/// clamped to [1, T-1].
ConfidenceSet bai_interval(const Sample& sample, const BreakFit& fit, const LimitParams& params,
                           double alpha, const ArgmaxQuantileConfig& cfg = {});

/// CSV rows (method, level, kappa, interval_lo, interval_hi); header optional.
void write_confidence_sets(std::ostream& out, const std::vector<ConfidenceSet>& sets, bool header = true);

}  // namespace crbreak
