#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "crbreak/crlimit.hpp"
#include "crbreak/errors.hpp"
#include "crbreak/hdr.hpp"
#include "crbreak/laplace.hpp"
#include "crbreak/lrv.hpp"
#include "crbreak/lsq.hpp"
#include "crbreak/mc.hpp"
#include "crbreak/model.hpp"
#include "crbreak/nuisance.hpp"

namespace py = pybind11;
using namespace crbreak;

namespace {

BreakSpec make_spec(std::optional<int> lo, std::optional<int> hi, double trimming) {
    BreakSpec s;
    s.search_lo = lo;
    s.search_hi = hi;
    s.trimming = trimming;
    return s;
}

ErrorMode parse_error_mode(const std::string& s) {
    if (s == "iid") return ErrorMode::iid;
    if (s == "serial") return ErrorMode::serial;
    throw Error(ErrorKind::config, "error_mode must be 'iid' or 'serial'");
}

DomainScale parse_domain(const std::string& s) {
    if (s == "sample") return DomainScale::sample;
    if (s == "literal") return DomainScale::literal;
    throw Error(ErrorKind::config, "domain must be 'sample' or 'literal'");
}

InferenceConfig make_inference(long n_draws, int grid_points, long n_outer, std::uint64_t seed, int threads,
                               const std::string& loss, const std::string& error_mode, const std::string& domain) {
    InferenceConfig cfg;
    cfg.sim.n_draws = n_draws;
    cfg.sim.grid_points = grid_points;
    cfg.sim.seed = seed;
    cfg.sim.threads = threads;
    cfg.sim.scale = parse_domain(domain);
    cfg.n_outer = n_outer;
    cfg.loss = Loss::parse(loss);
    cfg.error_mode = parse_error_mode(error_mode);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Break-date estimation, continuous-record inference and simulation studies";

    py::register_exception<Error>(m, "CrbreakError", PyExc_ValueError);

    py::class_<Sample>(m, "Sample")
        .def(py::init([](Eigen::VectorXd y, Eigen::MatrixXd z, std::optional<Eigen::MatrixXd> d) {
                 const auto T = y.size();
                 return Sample(std::move(y), d ? std::move(*d) : Eigen::MatrixXd(T, 0), std::move(z));
             }),
             py::arg("y"), py::arg("z"), py::arg("d") = py::none())
        .def_property_readonly("T", &Sample::size)
        .def_property_readonly("p", &Sample::p)
        .def_property_readonly("q", &Sample::q)
        .def_property_readonly("y", &Sample::y)
        .def_property_readonly("z", &Sample::z)
        .def_property_readonly("d", &Sample::d)
        .def_property_readonly("labels", &Sample::labels);

    m.def(
        "load_sample",
        [](const std::filesystem::path& path, const std::string& y, const std::vector<std::string>& z,
           const std::vector<std::string>& d, const std::string& label) {
            ColumnSchema schema;
            schema.y = y;
            schema.z = z;
            schema.d = d;
            schema.label = label;
            return load_sample(path, schema);
        },
        py::arg("path"), py::arg("y"), py::arg("z"), py::arg("d") = std::vector<std::string>{},
        py::arg("label") = "");

    py::class_<SegmentedFit>(m, "SegmentedFit")
        .def_readonly("tb", &SegmentedFit::tb)
        .def_readonly("beta_hat", &SegmentedFit::beta_hat)
        .def_readonly("delta_hat", &SegmentedFit::delta_hat)
        .def_readonly("residuals", &SegmentedFit::residuals)
        .def_readonly("ssr", &SegmentedFit::ssr)
        .def_readonly("criterion_q", &SegmentedFit::criterion_q);

    py::class_<BreakFit>(m, "BreakFit")
        .def_readonly("tb_hat", &BreakFit::tb_hat)
        .def_property_readonly("lambda_hat", &BreakFit::lambda_hat)
        .def_readonly("fit", &BreakFit::fit_at_tb)
        .def_property_readonly("search_range", [](const BreakFit& f) { return std::make_pair(f.range.lo, f.range.hi); })
        .def_readonly("q_profile", &BreakFit::q_profile)
        .def_readonly("ssr_profile", &BreakFit::ssr_profile);

    m.def("estimate_break",
          [](const Sample& s, std::optional<int> lo, std::optional<int> hi, double trimming) {
              return estimate_break(s, make_spec(lo, hi, trimming));
          },
          py::arg("sample"), py::arg("search_lo") = py::none(), py::arg("search_hi") = py::none(),
          py::arg("trimming") = 0.0);
    m.def("fit_at", &fit_at, py::arg("sample"), py::arg("tb"));

    py::class_<SupWaldResult>(m, "SupWaldResult")
        .def_readonly("statistic", &SupWaldResult::statistic)
        .def_readonly("argmax_date", &SupWaldResult::argmax_date)
        .def_readonly("critical_value", &SupWaldResult::critical_value)
        .def_readonly("reject", &SupWaldResult::reject)
        .def_readonly("profile", &SupWaldResult::profile);
    m.def(
        "sup_wald",
        [](const Sample& s, double trimming, const std::string& variance) {
            if (variance != "homoskedastic" && variance != "hac") {
                throw Error(ErrorKind::config, "variance must be 'homoskedastic' or 'hac'");
            }
            return sup_wald(s, trimming, variance == "hac" ? VarianceMode::hac : VarianceMode::homoskedastic);
        },
        py::arg("sample"), py::arg("trimming") = 0.15, py::arg("variance") = "homoskedastic");

    m.def(
        "long_run_variance",
        [](const Eigen::VectorXd& x, bool prewhiten, std::optional<double> bandwidth) {
            LrvConfig cfg;
            cfg.prewhiten = prewhiten;
            cfg.bandwidth = bandwidth;
            return long_run_variance(x, cfg).value;
        },
        py::arg("series"), py::arg("prewhiten") = true, py::arg("bandwidth") = py::none());

    py::class_<LimitParams>(m, "LimitParams")
        .def(py::init([](double phi_z, double phi_e, double rho_hat) {
                 LimitParams p;
                 p.phi_z = phi_z;
                 p.phi_e = phi_e;
                 p.rho_hat = rho_hat;
                 return p;
             }),
             py::arg("phi_z"), py::arg("phi_e"), py::arg("rho_hat"))
        .def_readonly("lambda_hat", &LimitParams::lambda_hat)
        .def_readonly("tb_hat", &LimitParams::tb_hat)
        .def_readonly("sample_size", &LimitParams::sample_size)
        .def_readonly("phi_z", &LimitParams::phi_z)
        .def_readonly("phi_e", &LimitParams::phi_e)
        .def_readonly("rho_hat", &LimitParams::rho_hat)
        .def_readonly("theta_hat", &LimitParams::theta_hat)
        .def_readonly("sigma2_hat", &LimitParams::sigma2_hat)
        .def_readonly("pooled_regime", &LimitParams::pooled_regime)
        .def_readonly("exact_fit", &LimitParams::exact_fit);

    m.def(
        "estimate_limit_params",
        [](const Sample& s, int tb, const std::string& error_mode) {
            return estimate_limit_params(s, fit_at(s, tb), parse_error_mode(error_mode));
        },
        py::arg("sample"), py::arg("tb"), py::arg("error_mode") = "iid");

    py::class_<DateDistribution>(m, "DateDistribution")
        .def(py::init([](int lo, std::vector<double> weights) { return DateDistribution::from_weights(lo, std::move(weights)); }),
             py::arg("lo"), py::arg("weights"))
        .def_readonly("lo", &DateDistribution::lo)
        .def_readonly("hi", &DateDistribution::hi)
        .def_readonly("pmf", &DateDistribution::pmf)
        .def_readonly("n_draws", &DateDistribution::n_draws)
        .def("mass", &DateDistribution::mass)
        .def("mean", &DateDistribution::mean)
        .def("median", &DateDistribution::median)
        .def("quantile", &DateDistribution::quantile);

    m.def(
        "simulate_cr",
        [](const LimitParams& params, int center, int T, long n_draws, int grid_points, std::uint64_t seed,
           int threads, const std::string& domain) {
            CrSimConfig cfg;
            cfg.n_draws = n_draws;
            cfg.grid_points = grid_points;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.scale = parse_domain(domain);
            py::gil_scoped_release release;
            return simulate_cr_distribution(params, center, T, cfg);
        },
        py::arg("params"), py::arg("center"), py::arg("T"), py::arg("n_draws") = 10000, py::arg("grid_points") = 2000,
        py::arg("seed") = 20240601, py::arg("threads") = 1, py::arg("domain") = "sample");

    m.def(
        "quasi_posterior",
        [](const std::vector<double>& q, int lo, const std::vector<double>& prior, double temperature) {
            return quasi_posterior(q, lo, prior, PriorId::custom, temperature).dist;
        },
        py::arg("q_profile"), py::arg("lo"), py::arg("prior"), py::arg("temperature") = 1.0);

    m.def(
        "gl_estimate",
        [](const DateDistribution& dist, const std::string& loss) { return gl_closed_form(dist, Loss::parse(loss)); },
        py::arg("dist"), py::arg("loss") = "absolute");

    py::class_<ConfidenceSet>(m, "ConfidenceSet")
        .def_readonly("level", &ConfidenceSet::level)
        .def_readonly("kappa", &ConfidenceSet::kappa)
        .def_readonly("dates", &ConfidenceSet::dates)
        .def_readonly("intervals", &ConfidenceSet::intervals)
        .def_readonly("achieved_mass", &ConfidenceSet::achieved_mass)
        .def_readonly("method", &ConfidenceSet::method)
        .def("__contains__", &ConfidenceSet::contains)
        .def("__len__", &ConfidenceSet::length);

    m.def("hdr_set", &hdr_set, py::arg("dist"), py::arg("alpha"), py::arg("method") = "custom");

    m.def(
        "estimate",
        [](const Sample& s, const std::string& method, std::optional<int> lo, std::optional<int> hi,
           double trimming, long n_draws, int grid_points, std::uint64_t seed, int threads, const std::string& loss,
           const std::string& error_mode, const std::string& domain) {
            const BreakSpec spec = make_spec(lo, hi, trimming);
            const InferenceConfig cfg = make_inference(n_draws, grid_points, 1, seed, threads, loss, error_mode, domain);
            py::gil_scoped_release release;
            switch (parse_method(method)) {
                case Method::ols: return estimate_break(s, spec).tb_hat;
                case Method::gl_cr: return gl_cr_estimate(s, spec, cfg);
                case Method::gl_cr_iter: return gl_cr_iter_estimate(s, spec, cfg);
                case Method::gl_uni: return gl_uni_estimate(s, spec, cfg);
                default: throw Error(ErrorKind::config, "'" + method + "' is not an estimator");
            }
        },
        py::arg("sample"), py::arg("method") = "gl-cr", py::arg("search_lo") = py::none(),
        py::arg("search_hi") = py::none(), py::arg("trimming") = 0.0, py::arg("n_draws") = 10000,
        py::arg("grid_points") = 2000, py::arg("seed") = 20240601, py::arg("threads") = 1,
        py::arg("loss") = "absolute", py::arg("error_mode") = "iid", py::arg("domain") = "sample");

    m.def(
        "confidence_set",
        [](const Sample& s, const std::string& method, double alpha, std::optional<int> lo, std::optional<int> hi,
           double trimming, long n_draws, int grid_points, long n_outer, std::uint64_t seed, int threads,
           const std::string& error_mode, const std::string& domain) {
            const BreakSpec spec = make_spec(lo, hi, trimming);
            const InferenceConfig cfg =
                make_inference(n_draws, grid_points, n_outer, seed, threads, "absolute", error_mode, domain);
            py::gil_scoped_release release;
            switch (parse_method(method)) {
                case Method::ols_cr_set: return confset_ols_cr(s, spec, alpha, cfg);
                case Method::gl_cr:
                case Method::gl_cr_set: return confset_gl_cr(s, spec, alpha, cfg);
                case Method::gl_cr_iter:
                case Method::gl_cr_iter_set: return confset_gl_cr_iter(s, spec, alpha, cfg);
                case Method::bai: {
                    const BreakFit fit = estimate_break(s, spec);
                    ArgmaxQuantileConfig q;
                    q.threads = threads;
                    return bai_interval(s, fit, estimate_limit_params(s, fit, cfg.error_mode, cfg.lrv), alpha, q);
                }
                default: throw Error(ErrorKind::config, "'" + method + "' is not a confidence-set method");
            }
        },
        py::arg("sample"), py::arg("method") = "ols-cr", py::arg("alpha") = 0.05, py::arg("search_lo") = py::none(),
        py::arg("search_hi") = py::none(), py::arg("trimming") = 0.0, py::arg("n_draws") = 10000,
        py::arg("grid_points") = 2000, py::arg("n_outer") = 2000, py::arg("seed") = 20240601,
        py::arg("threads") = 1, py::arg("error_mode") = "iid", py::arg("domain") = "sample");

    m.def(
        "generate",
        [](const std::string& model, int T, double lambda0, double delta0, std::uint64_t seed) {
            Stream rng(seed);
            Generated g = generate(DgpSpec{parse_model(model), T, lambda0, delta0}, rng);
            return std::make_pair(std::move(g.sample), g.true_tb);
        },
        py::arg("model"), py::arg("T") = 100, py::arg("lambda0") = 0.5, py::arg("delta0") = 1.0,
        py::arg("seed") = 20240601);

    m.def(
        "run_mc",
        [](const std::string& model, const std::vector<double>& lambda0, const std::vector<double>& delta0,
           long reps, const std::string& methods, int T, std::uint64_t seed, double alpha, double trimming,
           long n_draws, int grid_points, long n_outer, int threads) {
            McConfig cfg;
            cfg.model = parse_model(model);
            cfg.T = T;
            for (double l : lambda0) {
                for (double d : delta0) cfg.cells.emplace_back(l, d);
            }
            cfg.replications = reps;
            cfg.master_seed = seed;
            cfg.methods = parse_methods(methods);
            cfg.alpha = alpha;
            cfg.trimming = trimming;
            cfg.inference.sim.n_draws = n_draws;
            cfg.inference.sim.grid_points = grid_points;
            cfg.inference.n_outer = n_outer;
            cfg.threads = threads;
            std::ostringstream os;
            {
                py::gil_scoped_release release;
                emit_report(os, run_study(cfg));
            }
            return os.str();
        },
        py::arg("model"), py::arg("lambda0"), py::arg("delta0"), py::arg("reps") = 2000,
        py::arg("methods") = "ols,gl-cr,gl-cr-iter,gl-uni", py::arg("T") = 100, py::arg("seed") = 20240601,
        py::arg("alpha") = 0.05, py::arg("trimming") = 0.15, py::arg("n_draws") = 10000,
        py::arg("grid_points") = 2000, py::arg("n_outer") = 2000, py::arg("threads") = 1);
}
