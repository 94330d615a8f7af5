#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crbreak/hdr.hpp"
#include "crbreak/laplace.hpp"
#include "crbreak/lsq.hpp"
#include "crbreak/rng.hpp"

namespace crbreak {

enum class Model { M1, M2, M3, M4, M5, F1 };

Model parse_model(const std::string& text);
std::string model_name(Model m);

struct DgpSpec {
    Model model = Model::M1;
    int T = 100;
    double lambda0 = 0.5;
    double delta0 = 1.0;

    int true_tb() const;  // floor(T * lambda0), validated in [1, T-1]
};

struct Generated {
    Sample sample;
    int true_tb = 0;
};

inline constexpr int kBurnIn = 200;

Generated generate(const DgpSpec& dgp, Stream& rng);

/// Error treatment used by the inference methods for each design.
ErrorMode default_error_mode(Model m);
VarianceMode default_variance_mode(Model m);

enum class Method { ols, gl_cr, gl_cr_iter, gl_uni, ols_cr_set, gl_cr_set, gl_cr_iter_set, bai, sup_wald };

Method parse_method(const std::string& text);  // accepts '-' or '_'
std::string method_name(Method m);
std::vector<Method> parse_methods(const std::string& comma_list);
bool is_estimator(Method m);
bool is_set(Method m);

struct McConfig {
    Model model = Model::M1;
    int T = 100;
    std::vector<std::pair<double, double>> cells;  // (lambda0, delta0)
    long replications = 2000;
    std::uint64_t master_seed = 20240601;
    std::vector<Method> methods;
    double alpha = 0.05;
    double trimming = 0.15;  // LS search range of ols, ols-cr-set and bai
    InferenceConfig inference;
    std::optional<ErrorMode> error_mode;  // per-model default when unset
    ArgmaxQuantileConfig bai;
    double sup_wald_trimming = 0.15;
    std::optional<VarianceMode> variance_mode;
    CriticalValueTable critical_values = CriticalValueTable::defaults();
    int threads = 1;

    void check() const;
};

struct MetricRow {
    Method method;
    std::string metric;
    double value;
};

struct CellReport {
    int cell_id = 0;
    double lambda0 = 0.0;
    double delta0 = 0.0;
    long used = 0;      // replications entering the metrics
    long failures = 0;  // excluded after a numerical failure
    bool aborted = false;
    std::string abort_reason;
    std::vector<MetricRow> rows;
};

struct McReport {
    Model model = Model::M1;
    int T = 100;
    std::uint64_t seed = 0;
    long replications = 0;
    std::vector<Method> methods;
    std::vector<CellReport> cells;
    double wall_seconds = 0.0;
};

McReport run_study(const McConfig& cfg);

/// One row per (cell, method, metric); aborted cells are omitted.
void emit_report(std::ostream& out, const McReport& report);

/// Per-replication outcome for one method; exposed for tests.
struct MethodOutcome {
    double estimate = 0.0;  // estimators
    bool covered = false;   // sets
    int length = 0;         // sets
    bool reject = false;    // sup-Wald
};

std::vector<MethodOutcome> run_methods(const Generated& data, const McConfig& cfg, std::uint64_t seed);

/// Density comparison over dates 1..T-1: the finite-sample histogram of
/// LS estimates, the feasible CR density and the average GL-CR quasi-posterior.
struct DensityCompareConfig {
    DgpSpec dgp{Model::F1, 100, 0.5, 0.3};
    long replications = 2000;
    std::uint64_t master_seed = 20240601;
    InferenceConfig inference;
    long posterior_draws = 1000;  // CR draws behind each replication's prior
    int threads = 1;
};

struct DensityCompare {
    std::vector<int> dates;
    std::vector<double> finite_sample;
    std::vector<double> cr_density;
    std::vector<double> quasi_posterior;
    LimitParams params;  // plug-ins behind cr_density
    long failures = 0;
};

DensityCompare density_compare(const DensityCompareConfig& cfg);
void write_density_compare(std::ostream& out, const DensityCompare& dc);

}  // namespace crbreak
