#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crbreak {

/// Observed series for the partial structural change regression
///
///     y_t = D_t' b + Z_t' (beta + delta 1{t > tb}) + e_t,   t = 1..T.
///
/// D holds the non-breaking regressors (may have zero columns) and Z the
/// breaking ones. A constant column is never added implicitly. The object is
/// validated on construction and immutable afterwards.
class Sample {
public:
    Sample(Eigen::VectorXd y, Eigen::MatrixXd d, Eigen::MatrixXd z,
           std::vector<std::string> labels = {});

    int size() const noexcept { return static_cast<int>(y_.size()); }
    int p() const noexcept { return static_cast<int>(d_.cols()); }
    int q() const noexcept { return static_cast<int>(z_.cols()); }

    const Eigen::VectorXd& y() const noexcept { return y_; }
    const Eigen::MatrixXd& d() const noexcept { return d_; }
    const Eigen::MatrixXd& z() const noexcept { return z_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Full-sample regressors X = [D Z].
    Eigen::MatrixXd x() const;

    /// Z with the rows 1..tb zeroed (post-break block of the shift).
    Eigen::MatrixXd z_post(int tb) const;

private:
    Eigen::VectorXd y_;
    Eigen::MatrixXd d_;
    Eigen::MatrixXd z_;
    std::vector<std::string> labels_;
};

/// Candidate break dates. A date t splits the sample into {1..t} and
/// {t+1..T}. Unset bounds default to the widest identified range [q, T-q-1];
/// trimming in [0, 0.5) removes floor(trimming*T) dates at each end.
struct BreakSpec {
    std::optional<int> search_lo;
    std::optional<int> search_hi;
    double trimming = 0.0;
};

struct DateRange {
    int lo = 0;
    int hi = -1;

    int count() const noexcept { return hi - lo + 1; }
    bool contains(int t) const noexcept { return t >= lo && t <= hi; }
    bool operator==(const DateRange&) const = default;
};

/// Checks every Sample and BreakSpec invariant and returns the effective
/// search range. Throws crbreak::Error naming the offending value.
DateRange validate(const Sample& sample, const BreakSpec& spec = {});

/// Column mapping for CSV ingestion.
struct ColumnSchema {
    std::string y;
    std::vector<std::string> d;
    std::vector<std::string> z;
    std::string label;  // optional date-label column
};

Sample read_sample(std::istream& in, const ColumnSchema& schema);
Sample load_sample(const std::filesystem::path& path, const ColumnSchema& schema);

/// Writes the sample as CSV (header y,d1..,z1..[,label]) using the shortest
/// round-trip representation of each double. Returns the schema that reads
/// it back.
ColumnSchema write_sample(std::ostream& out, const Sample& sample);

}  // namespace crbreak
