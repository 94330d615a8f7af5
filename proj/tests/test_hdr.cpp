#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "crbreak/errors.hpp"
#include "crbreak/hdr.hpp"
#include "helpers.hpp"

using namespace crbreak;

namespace {

LimitParams unit_params(double rho, int tb, int T) {
    LimitParams p;
    p.rho_hat = rho;
    p.theta_hat = rho;
    p.phi_z = 1.0;
    p.phi_e = 1.0;
    p.tb_hat = tb;
    p.sample_size = T;
    p.lambda_hat = static_cast<double>(tb) / T;
    p.sigma2_hat = 1.0;
    return p;
}

bool is_subset(const ConfidenceSet& small, const ConfidenceSet& big) {
    return std::includes(big.dates.begin(), big.dates.end(), small.dates.begin(), small.dates.end());
}

}  // namespace

TEST_CASE("HDR examples") {
    const auto pm = hdr_set(DateDistribution::point_mass(1, 99, 50), 0.05);
    CHECK(pm.dates == std::vector<int>{50});
    CHECK(pm.achieved_mass == 1.0);

    const auto three = hdr_set(DateDistribution::from_weights(1, {0.5, 0.3, 0.2}), 0.3);
    CHECK(three.dates == std::vector<int>{1, 2});
    CHECK(three.achieved_mass == doctest::Approx(0.8));
    CHECK(three.kappa == doctest::Approx(0.3));

    const auto bimodal = hdr_set(DateDistribution::from_weights(1, {0.4, 0.05, 0.05, 0.05, 0.45}), 0.2);
    CHECK(bimodal.dates == std::vector<int>{1, 5});
    CHECK(bimodal.intervals.size() == 2);
    CHECK(bimodal.intervals[0] == std::pair<int, int>{1, 1});
    CHECK(bimodal.intervals[1] == std::pair<int, int>{5, 5});

    // every date tied at the threshold is kept
    const auto tied = hdr_set(DateDistribution::uniform(1, 10), 0.5);
    CHECK(tied.length() == 10);
    CHECK_THROWS_AS(hdr_set(DateDistribution::uniform(1, 10), 1.0), Error);
}

TEST_CASE("HDR invariants on random pmfs") {
    Stream rng(31);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform() * 12);
        const auto pmf = testutil::random_pmf(rng, n);
        const auto dist = DateDistribution::from_weights(1, pmf);
        const double alphas[] = {0.01, 0.05, 0.1, 0.3, 0.6};
        ConfidenceSet prev;
        for (std::size_t a = 0; a < 5; ++a) {
            const auto set = hdr_set(dist, alphas[a]);
            CHECK(set.achieved_mass >= 1.0 - alphas[a] - 1e-12);
            for (int t = 1; t <= n; ++t) {
                if (!set.contains(t)) CHECK(dist.mass(t) < set.kappa);
                else CHECK(dist.mass(t) >= set.kappa);
            }
            int covered = 0;
            for (const auto& [lo, hi] : set.intervals) covered += hi - lo + 1;
            CHECK(covered == set.length());
            if (a > 0) CHECK(is_subset(set, prev));
            prev = set;

            // minimality over all threshold sets
            for (int t = 1; t <= n; ++t) {
                const double k = dist.mass(t);
                if (k <= set.kappa) continue;
                double m = 0.0;
                for (double v : pmf) m += v >= k ? v : 0.0;
                CHECK(m < 1.0 - alphas[a] - 1e-12);
            }

            std::vector<double> scaled = pmf;
            for (double& v : scaled) v *= 7.0;
            CHECK(hdr_set(DateDistribution::from_weights(1, scaled), alphas[a]).dates == set.dates);
        }
    }
}

TEST_CASE("symmetric unimodal pmf gives a centered interval") {
    std::vector<double> w;
    for (int t = 1; t <= 41; ++t) w.push_back(std::exp(-0.5 * (t - 21) * (t - 21) / 16.0));
    const auto set = hdr_set(DateDistribution::from_weights(1, w), 0.1);
    REQUIRE(set.intervals.size() == 1);
    CHECK(set.intervals[0].first + set.intervals[0].second == 42);
}

TEST_CASE("GL sampling distribution") {
    CrSimConfig cfg;
    cfg.grid_points = 400;
    const std::vector<double> flat(99, 1.0);
    const auto one = gl_sampling_distribution(unit_params(0.2, 50, 100), 50, 100, Loss::absolute(), 1, flat, 1, cfg);
    CHECK(*std::max_element(one.pmf.begin(), one.pmf.end()) == 1.0);

    const auto dist = gl_sampling_distribution(unit_params(0.2, 50, 100), 50, 100, Loss::absolute(), 1, flat, 4000, cfg);
    dist.check();
    double sd = 0.0;
    for (int i = 0; i < dist.size(); ++i) sd += dist.pmf[static_cast<std::size_t>(i)] * std::pow(dist.date(i) - dist.mean(), 2);
    CHECK(std::abs(dist.mean() - 50.0) < 3.0 * std::sqrt(sd / 4000.0));

    cfg.threads = 4;
    const auto again = gl_sampling_distribution(unit_params(0.2, 50, 100), 50, 100, Loss::absolute(), 1, flat, 4000, cfg);
    CHECK(again.pmf == dist.pmf);

    CHECK_THROWS_AS(gl_sampling_distribution(unit_params(0.2, 50, 100), 50, 100, Loss::absolute(), 200, {1.0}, 5, cfg),
                    Error);
}

TEST_CASE("confidence sets on a noiseless large break") {
    const Sample s = testutil::mean_shift(100, 50, 3.0, 0.0, 1);
    InferenceConfig cfg;
    cfg.sim.n_draws = 500;
    cfg.sim.grid_points = 400;
    cfg.n_outer = 200;
    for (const auto& set : {confset_ols_cr(s, {}, 0.05, cfg), confset_gl_cr(s, {}, 0.05, cfg),
                            confset_gl_cr_iter(s, {}, 0.05, cfg)}) {
        CHECK(set.contains(50));
        CHECK(set.length() <= 3);
    }
}

TEST_CASE("confidence sets on noisy data") {
    const Sample s = testutil::mean_shift(100, 50, 1.0, 1.0, 4);
    InferenceConfig cfg;
    cfg.sim.n_draws = 2000;
    cfg.sim.grid_points = 500;
    cfg.n_outer = 300;
    const auto ols = confset_ols_cr(s, {}, 0.05, cfg);
    CHECK(ols.achieved_mass >= 0.95 - 1e-12);
    CHECK(ols.method == "ols_cr");
    const auto gl = confset_gl_cr(s, {}, 0.05, cfg);
    CHECK(gl.method == "gl_cr");
    CHECK(gl.achieved_mass >= 0.95 - 1e-12);
    CHECK(confset_gl_cr(s, {}, 0.05, cfg).dates == gl.dates);
    CHECK(confset_gl_cr_iter(s, {}, 0.05, cfg).method == "gl_cr_iter");
}

TEST_CASE("argmax quantile agrees with an independent simulation") {
    // argmax of W(s) - |s|/2 on [-60, 60], independent generator and loop
    std::mt19937_64 gen(123);
    std::normal_distribution<double> nd;
    const int n = 20000;
    const double dt = 0.02;
    const int steps = 3000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
        double best = 0.0, arg = 0.0;
        for (int side : {-1, 1}) {
            double w = 0.0;
            for (int j = 1; j <= steps; ++j) {
                w += std::sqrt(dt) * nd(gen);
                const double v = w - 0.5 * j * dt;
                if (v > best) {
                    best = v;
                    arg = side * j * dt;
                }
            }
        }
        draws[i] = arg;
    }
    std::sort(draws.begin(), draws.end());
    const double oracle = draws[static_cast<std::size_t>(0.975 * n)];
    const auto [lo, hi] = argmax_quantiles(1.0, 1.0, 0.05);
    CHECK(hi == doctest::Approx(oracle).epsilon(0.07));
    CHECK(hi == doctest::Approx(11.03).epsilon(0.07));
    CHECK(lo == doctest::Approx(-hi).epsilon(0.07));
    CHECK(argmax_quantiles(1.0, 1.0, 0.05) == std::make_pair(lo, hi));
    CHECK(argmax_quantiles(1.01, 0.99, 0.05) == std::make_pair(lo, hi));
}

TEST_CASE("long-span interval") {
    const Sample s = testutil::mean_shift(100, 50, 1.0, 1.0, 4);
    const BreakFit fit = estimate_break(s);
    const LimitParams p = estimate_limit_params(s, fit);
    ArgmaxQuantileConfig qc;
    qc.n_draws = 4000;
    const auto set = bai_interval(s, fit, p, 0.05, qc);
    const auto [lo, hi] = argmax_quantiles(p.phi_z, p.phi_e, 0.05, qc);
    CHECK(set.method == "bai");
    CHECK(set.intervals.size() == 1);
    CHECK(set.intervals[0].first == std::max(1, fit.tb_hat - static_cast<int>(std::ceil(hi / p.rho_hat))));
    CHECK(set.intervals[0].second == std::min(99, fit.tb_hat + static_cast<int>(std::ceil(-lo / p.rho_hat))));
}

TEST_CASE("confidence set csv") {
    ConfidenceSet a;
    a.method = "ols_cr";
    a.level = 0.95;
    a.kappa = 0.25;
    a.dates = {3, 4, 5, 9};
    a.intervals = runs_of(a.dates);
    std::ostringstream out;
    write_confidence_sets(out, {a});
    CHECK(out.str() == "method,level,kappa,interval_lo,interval_hi\nols_cr,0.95,0.25,3,5\nols_cr,0.95,0.25,9,9\n");
    std::ostringstream none;
    write_confidence_sets(none, {});
    CHECK(none.str() == "method,level,kappa,interval_lo,interval_hi\n");
}
