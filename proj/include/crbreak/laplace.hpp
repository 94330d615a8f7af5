#pragma once

#include <string>
#include <vector>

#include "crbreak/crlimit.hpp"
#include "crbreak/lsq.hpp"
#include "crbreak/nuisance.hpp"

namespace crbreak {

struct Loss {
    enum class Kind { absolute, squared, poly, check };
    Kind kind = Kind::absolute;
    double param = 0.0;  // exponent m for poly, tau for check

    static Loss absolute() { return {Kind::absolute, 0.0}; }
    static Loss squared() { return {Kind::squared, 0.0}; }
    static Loss poly(double m);
    static Loss check(double tau);
    static Loss parse(const std::string& text);  // "absolute", "squared", "poly:m", "check:tau"
    std::string name() const;
};

double loss_eval(const Loss& loss, double r);

enum class PriorId { cr, uniform, custom };

struct QuasiPosterior {
    DateDistribution dist;
    std::vector<double> log_weights;  // (Q - max Q) / temperature + log prior
    PriorId prior_id = PriorId::custom;
};

/// pmf proportional to exp((Q - max Q) / temperature) * prior over dates
/// lo, lo+1, ... Entries with Q = -inf or zero prior get zero mass.
QuasiPosterior quasi_posterior(const std::vector<double>& q_profile, int lo,
                               const std::vector<double>& prior, PriorId id = PriorId::custom,
                               double temperature = 1.0);

double expected_risk(const DateDistribution& dist, const Loss& loss, int s);
double expected_risk(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss,
                     double s);

/// Brute-force risk minimizer over the support dates; ties go to the
/// smaller date.
int gl_estimate(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss);
int gl_estimate(const DateDistribution& dist, const Loss& loss);
inline int gl_estimate(const QuasiPosterior& post, const Loss& loss) { return gl_estimate(post.dist, loss); }

/// Closed-form minimizers: median (absolute), nearest date to the mean
/// (squared), smallest date with cdf >= 1 - tau (check). Poly losses fall
/// back to the generic minimizer.
int gl_closed_form(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss);
int gl_closed_form(const DateDistribution& dist, const Loss& loss);

struct InferenceConfig {
    ErrorMode error_mode = ErrorMode::iid;
    LrvConfig lrv;
    CrSimConfig sim;
    double prior_bandwidth = 1.0;  // Gaussian smoothing of the CR prior, in dates
    double temperature = 1.0;
    Loss loss = Loss::absolute();
    long n_outer = 2000;
};

/// LS fit, plug-ins at the LS date and the CR distribution simulated there.
struct LsStage {
    BreakFit fit;
    LimitParams params;
    DateDistribution cr;
};

struct GlStage {
    int estimate = 0;
    std::vector<double> prior;  // over fit.range
    QuasiPosterior post;
};

/// Plug-ins recomputed at the GL date and the CR distribution re-simulated there.
struct IterStage {
    int estimate = 0;
    LimitParams params;
    DateDistribution cr;
};

LsStage ls_stage(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg);

/// Smoothed CR density restricted to the search range.
std::vector<double> cr_prior(const LsStage& ls, const InferenceConfig& cfg);

GlStage gl_stage(const BreakFit& fit, std::vector<double> prior, PriorId id, const InferenceConfig& cfg);
IterStage iter_stage(const Sample& sample, int gl_estimate, const InferenceConfig& cfg);

int gl_cr_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg);
int gl_uni_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg);
int gl_cr_iter_estimate(const Sample& sample, const BreakSpec& spec, const InferenceConfig& cfg);

}  // namespace crbreak
