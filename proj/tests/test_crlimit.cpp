#include <doctest.h>

#include <cmath>
#include <numeric>

#include "crbreak/crlimit.hpp"
#include "crbreak/errors.hpp"

using namespace crbreak;

namespace {

LimitParams params_with(double rho, double phi_z = 1.0, double phi_e = 1.0, int tb = 50, int T = 100) {
    LimitParams p;
    p.rho_hat = rho;
    p.theta_hat = rho;
    p.phi_z = phi_z;
    p.phi_e = phi_e;
    p.tb_hat = tb;
    p.sample_size = T;
    p.lambda_hat = static_cast<double>(tb) / T;
    p.sigma2_hat = 1.0;
    return p;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
    return 0.5 * tv;
}

}  // namespace

TEST_CASE("V* endpoint moments") {
    const long n = 100000;
    VStarSpec spec;
    spec.a_neg = spec.a_pos = spec.grid_step = 2.0;
    spec.phi_z = 1.5;
    spec.phi_e = 2.0;
    double sl = 0, sl2 = 0, sr = 0, sr2 = 0;
    for (long i = 0; i < n; ++i) {
        Stream rng(derive_seed(5, {static_cast<std::uint64_t>(i)}));
        const VStarPath p = simulate_vstar_path(spec, rng);
        const double l = p.values.front();
        const double r = p.values.back();
        sl += l;
        sl2 += l * l;
        sr += r;
        sr2 += r * r;
    }
    const double ml = sl / n, mr = sr / n;
    const double vl = sl2 / n - ml * ml, vr = sr2 / n - mr * mr;
    // left branch: drift -a/2, variance a; right: drift -phi_z a/2, variance phi_e a
    CHECK(std::abs(ml + 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(mr + 1.5) < 3.0 * std::sqrt(4.0 / n));
    CHECK(std::abs(vl - 2.0) < 3.0 * 2.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(vr - 4.0) < 3.0 * 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("V* variance grows like phi_e s on a fine grid") {
    const long n = 100000;
    VStarSpec spec;
    spec.a_neg = 0.5;
    spec.a_pos = 1.0;
    spec.grid_step = 0.1;
    spec.phi_e = 3.0;
    const std::size_t mid = 5 + 5;  // s = 0.5
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
        Stream rng(derive_seed(6, {static_cast<std::uint64_t>(i)}));
        const double v = simulate_vstar_path(spec, rng).values[mid];
        s += v;
        s2 += v * v;
    }
    const double m = s / n;
    CHECK((s2 / n - m * m) / 0.5 == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("argmax tie rules") {
    VStarPath flat;
    flat.step = 0.5;
    flat.n_neg = 3;
    flat.values.assign(7, 0.0);
    CHECK(argmax_index(flat) == 0);

    VStarPath drift = flat;
    for (std::size_t i = 0; i < drift.values.size(); ++i) drift.values[i] = -0.5 * std::abs(drift.s(i));
    CHECK(argmax_draw(drift) == 0.0);

    VStarPath twin = flat;
    twin.values = {0, 1, 0, 0, 0, 1, 0};
    CHECK(argmax_index(twin) == -2);

    VStarPath up = flat;
    for (std::size_t i = 0; i < up.values.size(); ++i) up.values[i] = static_cast<double>(i);
    CHECK(argmax_draw(up) == doctest::Approx(1.5));
    CHECK_THROWS_AS(argmax_index(VStarPath{}), Error);
}

TEST_CASE("fast argmax matches the materialized path") {
    VStarSpec spec;
    spec.a_neg = 3.0;
    spec.a_pos = 7.0;
    spec.grid_step = 0.05;
    spec.phi_z = 0.7;
    spec.phi_e = 1.8;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Stream a(seed), b(seed);
        CHECK(draw_argmax_offset(spec, a) == argmax_index(simulate_vstar_path(spec, b)));
    }
}

TEST_CASE("symmetric spec gives a symmetric argmax law") {
    VStarSpec spec;
    spec.a_neg = spec.a_pos = 5.0;
    spec.grid_step = 0.05;
    const long n = 100000;
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
        Stream rng(derive_seed(77, {static_cast<std::uint64_t>(i)}));
        const double x = draw_argmax_offset(spec, rng) * spec.grid_step;
        s += x;
        s2 += x * x;
    }
    const double m = s / n;
    const double sd = std::sqrt(s2 / n - m * m);
    CHECK(std::abs(m) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("spec validation") {
    VStarSpec spec;
    spec.grid_step = 0.3;
    spec.a_neg = 1.0;
    CHECK_THROWS_AS(spec.check(), Error);
    spec.a_neg = 0.9;
    spec.a_pos = 0.0;
    CHECK_THROWS_AS(spec.check(), Error);
    spec.a_pos = 0.3;
    spec.phi_e = 0.0;
    CHECK_THROWS_AS(spec.check(), Error);
}

TEST_CASE("domain mapping") {
    const LimitParams p = params_with(0.2, 1.0, 1.0, 30);
    const int T = 100;
    const VStarSpec spec = cr_domain(p, 30, T, 2000);
    const int m = steps_per_date(T, 2000);
    CHECK(m == 20);
    CHECK(spec.n_neg() == 30 * m);
    CHECK(spec.n_pos() == 70 * m);
    CHECK(spec.a_neg == doctest::Approx(0.2 * 30));
    CHECK(spec.a_pos == doctest::Approx(0.2 * 70));
    // endpoints land on the first and last observation
    CHECK(30 - std::lround(static_cast<double>(spec.n_neg()) / m) == 0);
    CHECK(30 + std::lround(static_cast<double>(spec.n_pos()) / m) == T);

    const VStarSpec lit = cr_domain(params_with(0.2), 50, T, 2000, DomainScale::literal);
    CHECK(lit.a_neg + lit.a_pos == doctest::Approx(0.04));
    CHECK_THROWS_AS(cr_domain(params_with(0.0), 50, T, 2000), Error);
    CHECK_THROWS_AS(cr_domain(params_with(1.0), 0, T, 2000), Error);
}

TEST_CASE("CR distribution basics") {
    CrSimConfig cfg;
    cfg.n_draws = 4000;
    cfg.grid_points = 500;
    const DateDistribution d = simulate_cr_distribution(params_with(0.5), 50, 100, cfg);
    d.check();
    CHECK(d.lo == 1);
    CHECK(d.hi == 99);
    CHECK(d.n_draws == 4000);
    CHECK(d.mass(50) > 0.05);

    std::vector<double> s_star;
    const DateDistribution big = simulate_cr_distribution(params_with(200.0), 40, 100, cfg, &s_star);
    CHECK(big.mass(40) > 0.99);
    CHECK(s_star.size() == 4000);

    LimitParams exact = params_with(1.0);
    exact.exact_fit = true;
    exact.rho_hat = std::numeric_limits<double>::infinity();
    CHECK(simulate_cr_distribution(exact, 37, 100, cfg).mass(37) == 1.0);
}

TEST_CASE("CR distribution is identical across thread counts") {
    CrSimConfig cfg;
    cfg.n_draws = 3000;
    cfg.grid_points = 400;
    const LimitParams p = params_with(0.15, 1.3, 0.8, 35);
    cfg.threads = 1;
    const auto one = simulate_cr_distribution(p, 35, 100, cfg).pmf;
    for (int t : {4, 16}) {
        cfg.threads = t;
        CHECK(simulate_cr_distribution(p, 35, 100, cfg).pmf == one);
    }
    cfg.seed = 1;
    CHECK(simulate_cr_distribution(p, 35, 100, cfg).pmf != one);
}

TEST_CASE("larger breaks concentrate the CR distribution") {
    CrSimConfig cfg;
    cfg.n_draws = 20000;
    cfg.grid_points = 1000;
    const auto iqr = [&](double rho) {
        const DateDistribution d = simulate_cr_distribution(params_with(rho), 50, 100, cfg);
        return d.quantile(0.75) - d.quantile(0.25);
    };
    CHECK(iqr(0.4) < iqr(0.1));
    CHECK(iqr(1.6) < iqr(0.4));
}

TEST_CASE("grid refinement stability") {
    // T rho close to 10
    CrSimConfig cfg;
    cfg.n_draws = 100000;
    cfg.grid_points = 1000;
    const LimitParams p = params_with(0.094);
    const auto coarse = simulate_cr_distribution(p, 50, 100, cfg).pmf;
    cfg.grid_points = 2000;
    cfg.seed = 99;
    const auto fine = simulate_cr_distribution(p, 50, 100, cfg).pmf;
    CHECK(total_variation(coarse, fine) < 0.05);
}

TEST_CASE("date distribution summaries") {
    const auto d = DateDistribution::from_weights(10, {1.0, 2.0, 1.0});
    CHECK(d.mean() == doctest::Approx(11.0));
    CHECK(d.median() == 11);
    CHECK(d.quantile(0.25) == 10);
    CHECK(d.quantile(0.26) == 11);
    CHECK(DateDistribution::uniform(1, 4).median() == 2);
    CHECK_THROWS_AS(DateDistribution::from_weights(1, {0.0, 0.0}), Error);
    DateDistribution bad = d;
    bad.pmf[0] += 1e-9;
    CHECK_THROWS_AS(bad.check(), Error);
}

TEST_CASE("density smoothing") {
    const auto pm = DateDistribution::point_mass(1, 99, 50);
    CHECK(density(pm) == pm.pmf);

    const auto bump = density(pm, Smoothing::gaussian, 2.0);
    CHECK(std::accumulate(bump.begin(), bump.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 1; k < 10; ++k) {
        CHECK(bump[static_cast<std::size_t>(49 - k)] == doctest::Approx(bump[static_cast<std::size_t>(49 + k)]).epsilon(1e-12));
        CHECK(bump[static_cast<std::size_t>(49 - k)] < bump[static_cast<std::size_t>(49 - k + 1)]);
    }
    for (double v : bump) CHECK(v > 0.0);

    const auto uni = DateDistribution::uniform(1, 99);
    for (double bw : {0.5, 2.0, 7.5}) {
        const auto out = density(uni, Smoothing::gaussian, bw);
        for (double v : out) CHECK(std::abs(v - 1.0 / 99) < 1e-9);
    }
    CHECK_THROWS_AS(density(uni, Smoothing::gaussian, 0.0), Error);
}
