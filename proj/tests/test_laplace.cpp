#include <doctest.h>

#include <cmath>
#include <limits>

#include "crbreak/errors.hpp"
#include "crbreak/laplace.hpp"
#include "helpers.hpp"

using namespace crbreak;

namespace {

std::vector<int> iota_dates(int lo, int n) {
    std::vector<int> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = lo + i;
    return d;
}

int brute_argmin(const std::vector<int>& dates, const std::vector<double>& pmf, const Loss& loss) {
    int best = dates.front();
    double best_r = std::numeric_limits<double>::infinity();
    for (int s : dates) {
        double r = 0.0;
        for (std::size_t j = 0; j < dates.size(); ++j) r += loss_eval(loss, s - dates[j]) * pmf[j];
        if (r < best_r * (1.0 - 1e-12)) {
            best_r = r;
            best = s;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("loss values") {
    CHECK(loss_eval(Loss::absolute(), -3.0) == 3.0);
    CHECK(loss_eval(Loss::squared(), -3.0) == 9.0);
    CHECK(loss_eval(Loss::poly(2.0), 1.5) == doctest::Approx(2.25));
    for (double r : {-2.5, -1.0, 0.0, 0.5, 4.0}) CHECK(loss_eval(Loss::check(0.5), r) == doctest::Approx(0.5 * std::abs(r)));
    CHECK(loss_eval(Loss::check(0.25), 2.0) == doctest::Approx(0.5));
    CHECK(loss_eval(Loss::check(0.25), -2.0) == doctest::Approx(1.5));

    CHECK(Loss::parse("absolute").kind == Loss::Kind::absolute);
    CHECK(Loss::parse("check:0.3").param == doctest::Approx(0.3));
    CHECK(Loss::parse("poly:3").kind == Loss::Kind::poly);
    CHECK_THROWS_AS(Loss::parse("check:1.5"), Error);
    CHECK_THROWS_AS(Loss::parse("poly:x"), Error);
    CHECK_THROWS_AS(Loss::parse("huber"), Error);
}

TEST_CASE("quasi-posterior examples") {
    const auto flat = quasi_posterior({2.0, 2.0, 2.0, 2.0}, 5, std::vector<double>(4, 1.0));
    for (double v : flat.dist.pmf) CHECK(v == 0.25);
    CHECK(flat.dist.lo == 5);

    const auto three = quasi_posterior({0.0, std::log(2.0), 0.0}, 1, {1.0, 1.0, 1.0});
    CHECK(three.dist.pmf[0] == 0.25);
    CHECK(three.dist.pmf[1] == 0.5);
    CHECK(three.dist.pmf[2] == 0.25);
}

TEST_CASE("quasi-posterior shift invariance is exact") {
    Stream rng(3);
    std::vector<double> q(40), prior(40);
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = 30.0 * rng.uniform();
        prior[i] = rng.uniform();
    }
    const auto base = quasi_posterior(q, 1, prior);
    for (double c : {-1e3, -2.5, 7.0, 1e4}) {
        std::vector<double> shifted = q;
        for (double& v : shifted) v += c;
        const auto post = quasi_posterior(shifted, 1, prior);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(post.dist.pmf[i] == doctest::Approx(base.dist.pmf[i]).epsilon(1e-12));
    }
    std::vector<double> dyadic = q;
    for (double& v : dyadic) v = std::round(v * 8.0) / 8.0;
    const auto a = quasi_posterior(dyadic, 1, prior);
    for (double& v : dyadic) v += 64.0;
    CHECK(quasi_posterior(dyadic, 1, prior).dist.pmf == a.dist.pmf);
}

TEST_CASE("quasi-posterior handles huge criteria and zero prior") {
    const auto post = quasi_posterior({1e6, 1e6 - 1.0, -std::numeric_limits<double>::infinity()}, 1, {1.0, 1.0, 1.0});
    CHECK(post.dist.pmf[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(post.dist.pmf[2] == 0.0);
    const auto masked = quasi_posterior({5.0, 1.0}, 1, {0.0, 1.0});
    CHECK(masked.dist.pmf[1] == 1.0);
    CHECK_THROWS_AS(quasi_posterior({1.0}, 1, {0.0}), Error);
    CHECK_THROWS_AS(quasi_posterior({1.0, 2.0}, 1, {1.0}), Error);
    CHECK_THROWS_AS(quasi_posterior({1.0}, 1, {-1.0}), Error);
}

TEST_CASE("expected risk") {
    const auto pm = DateDistribution::point_mass(1, 10, 4);
    CHECK(expected_risk(pm, Loss::squared(), 7) == 9.0);
    const auto uni = DateDistribution::uniform(1, 3);
    CHECK(expected_risk(uni, Loss::absolute(), 2) == doctest::Approx(2.0 / 3.0));

    Stream rng(8);
    const auto pmf = testutil::random_pmf(rng, 30);
    const auto dist = DateDistribution::from_weights(11, pmf);
    for (int s = 11; s <= 40; s += 7) {
        double ref = 0.0;
        for (int t = 0; t < 30; ++t) ref += (s - 11 - t) * (s - 11 - t) * dist.pmf[static_cast<std::size_t>(t)];
        CHECK(expected_risk(dist, Loss::squared(), s) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK_THROWS_AS(expected_risk(dist, Loss::squared(), 5), Error);
}

TEST_CASE("GL estimate examples") {
    CHECK(gl_estimate({10, 20, 30}, {0.2, 0.5, 0.3}, Loss::absolute()) == 20);
    CHECK(gl_estimate({10, 20}, {0.5, 0.5}, Loss::squared()) == 10);
    CHECK(gl_closed_form({10, 20}, {0.5, 0.5}, Loss::squared()) == 10);
    CHECK(gl_estimate(DateDistribution::point_mass(1, 9, 6), Loss::poly(1.5)) == 6);
}

TEST_CASE("closed forms agree with the generic minimizer on random pmfs") {
    Stream rng(2024);
    const Loss losses[] = {Loss::absolute(), Loss::squared(), Loss::check(0.75), Loss::check(0.1), Loss::poly(3.0)};
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform() * 60);
        const auto dates = iota_dates(1 + static_cast<int>(rng.uniform() * 50), n);
        const auto pmf = testutil::random_pmf(rng, n);
        for (const Loss& loss : losses) {
            const int generic = gl_estimate(dates, pmf, loss);
            CHECK(gl_closed_form(dates, pmf, loss) == generic);
            CHECK(brute_argmin(dates, pmf, loss) == generic);
        }
    }
}

TEST_CASE("GL estimate shifts with the support") {
    Stream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const auto pmf = testutil::random_pmf(rng, 25);
        for (const Loss& loss : {Loss::absolute(), Loss::squared(), Loss::check(0.3)}) {
            const int a = gl_estimate(iota_dates(1, 25), pmf, loss);
            CHECK(gl_estimate(iota_dates(18, 25), pmf, loss) == a + 17);
        }
    }
}

TEST_CASE("prior dominance and flat prior reduction") {
    const Sample s = testutil::mean_shift(80, 30, 0.6, 1.0, 9);
    const BreakFit fit = estimate_break(s);
    const int n = fit.range.count();

    std::vector<double> spike(static_cast<std::size_t>(n), 1e-12);
    spike[static_cast<std::size_t>(55 - fit.range.lo)] = 1.0;
    InferenceConfig cfg;
    CHECK(gl_stage(fit, spike, PriorId::custom, cfg).estimate == 55);

    const GlStage uni = gl_stage(fit, std::vector<double>(static_cast<std::size_t>(n), 1.0), PriorId::uniform, cfg);
    const auto& pmf = uni.post.dist.pmf;
    const auto mode = std::max_element(pmf.begin(), pmf.end()) - pmf.begin();
    CHECK(uni.post.dist.date(static_cast<int>(mode)) == fit.tb_hat);
    CHECK(uni.post.prior_id == PriorId::uniform);
}

TEST_CASE("pipelines on a noiseless large break") {
    const Sample s = testutil::mean_shift(100, 50, 3.0, 0.0, 1);
    InferenceConfig cfg;
    cfg.sim.n_draws = 500;
    cfg.sim.grid_points = 400;
    CHECK(gl_cr_estimate(s, {}, cfg) == 50);
    CHECK(gl_uni_estimate(s, {}, cfg) == 50);
    CHECK(gl_cr_iter_estimate(s, {}, cfg) == 50);
}

TEST_CASE("pipelines are deterministic and stage seeds differ") {
    const Sample s = testutil::mean_shift(100, 40, 0.8, 1.0, 12);
    InferenceConfig cfg;
    cfg.sim.n_draws = 800;
    cfg.sim.grid_points = 400;
    const LsStage a = ls_stage(s, {}, cfg);
    const LsStage b = ls_stage(s, {}, cfg);
    CHECK(a.cr.pmf == b.cr.pmf);
    const auto prior = cr_prior(a, cfg);
    CHECK(prior.size() == static_cast<std::size_t>(a.fit.range.count()));
    for (double v : prior) CHECK(v > 0.0);
    const GlStage gl = gl_stage(a.fit, prior, PriorId::cr, cfg);
    const IterStage it = iter_stage(s, a.fit.tb_hat, cfg);
    CHECK(it.params.tb_hat == a.fit.tb_hat);
    CHECK(it.cr.pmf != a.cr.pmf);
    CHECK(iter_stage(s, gl.estimate, cfg).estimate == gl_cr_iter_estimate(s, {}, cfg));
}
