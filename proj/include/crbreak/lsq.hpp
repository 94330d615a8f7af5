#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crbreak/lrv.hpp"
#include "crbreak/model.hpp"

namespace crbreak {

/// Least-squares fit of y on [X, Z2] for one candidate date.
struct SegmentedFit {
    int tb = 0;
    Eigen::VectorXd beta_hat;   // coefficients on X = [D Z]
    Eigen::VectorXd delta_hat;  // shift on the post-break Z block
    Eigen::VectorXd residuals;
    double ssr = 0.0;
    double criterion_q = 0.0;
};

struct BreakFit {
    int tb_hat = 0;
    SegmentedFit fit_at_tb;
    DateRange range;
    std::vector<double> q_profile;    // one entry per date in range
    std::vector<double> ssr_profile;  // +inf marks a rank-deficient split

    double lambda_hat() const noexcept {
        return static_cast<double>(tb_hat) / static_cast<double>(fit_at_tb.residuals.size());
    }
};

inline constexpr double kRankTolerance = 1e-10;

SegmentedFit fit_at(const Sample& sample, int tb);

/// Profiles the criterion over the search range and returns its argmax
/// (smallest date on ties). Rank-deficient dates carry Q = -inf.
BreakFit estimate_break(const Sample& sample, const BreakSpec& spec = {});

enum class VarianceMode { homoskedastic, hac };

/// Critical values of the sup-Wald test keyed by (q, trimming).
class CriticalValueTable {
public:
    /// 5% values for trimming 0.15, q = 1..3.
    static CriticalValueTable defaults();

    void set(int q, double trimming, double value);
    double lookup(int q, double trimming) const;  // config error when absent
    bool contains(int q, double trimming) const;

private:
    static std::pair<int, long> key(int q, double trimming);
    std::map<std::pair<int, long>, double> values_;
};

struct SupWaldResult {
    double statistic = 0.0;
    int argmax_date = 0;
    double critical_value = 0.0;
    bool reject = false;
    std::vector<double> profile;
    DateRange range;
};

SupWaldResult sup_wald(const Sample& sample, double trimming, VarianceMode mode,
                       const CriticalValueTable& table = CriticalValueTable::defaults(),
                       const LrvConfig& lrv = {});

}  // namespace crbreak
