#include "crbreak/mc.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "crbreak/errors.hpp"
#include "crbreak/parallel.hpp"

namespace crbreak {

namespace {

// Neumaier summation.
class Accumulator {
public:
    void add(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double sum() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double mean_of(const std::vector<double>& xs) {
    Accumulator a;
    for (double x : xs) a.add(x);
    return a.sum() / static_cast<double>(xs.size());
}

double type1_quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n - 1e-9)));
    return xs[std::min(xs.size(), k) - 1];
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Eigen::VectorXd ar1_series(Stream& rng, int T, double a, double sd) {
    double e = 0.0;
    for (int i = 0; i < kBurnIn; ++i) e = a * e + sd * rng.normal();
    Eigen::VectorXd out(T);
    for (int t = 0; t < T; ++t) {
        e = a * e + sd * rng.normal();
        out(t) = e;
    }
    return out;
}

Eigen::VectorXd arma11_series(Stream& rng, int T, double a, double b) {
    double z = 0.0;
    double u_prev = 0.0;
    Eigen::VectorXd out(T);
    for (int i = 0; i < kBurnIn + T; ++i) {
        const double u = rng.normal();
        z = a * z + u + b * u_prev;
        u_prev = u;
        if (i >= kBurnIn) out(i - kBurnIn) = z;
    }
    return out;
}

Eigen::VectorXd step(int T, int tb) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(T);
    s.tail(T - tb).setOnes();
    return s;
}

}  // namespace

Model parse_model(const std::string& text) {
    static const std::pair<const char*, Model> table[] = {{"M1", Model::M1}, {"M2", Model::M2}, {"M3", Model::M3},
                                                          {"M4", Model::M4}, {"M5", Model::M5}, {"F1", Model::F1}};
    std::string upper = text;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& [name, m] : table) {
        if (upper == name) return m;
    }
    throw Error(ErrorKind::config, "unknown model '" + text + "' (M1..M5, F1)");
}

std::string model_name(Model m) {
    switch (m) {
        case Model::M1: return "M1";
        case Model::M2: return "M2";
        case Model::M3: return "M3";
        case Model::M4: return "M4";
        case Model::M5: return "M5";
        case Model::F1: return "F1";
    }
    return "?";
}

int DgpSpec::true_tb() const {
    const int tb = static_cast<int>(std::floor(T * lambda0 + 1e-9));
    if (T < 10 || tb < 1 || tb > T - 1) {
        throw Error(ErrorKind::config, "design needs T >= 10 and floor(T*lambda0) in [1, T-1]");
    }
    return tb;
}

Generated generate(const DgpSpec& dgp, Stream& rng) {
    const int T = dgp.T;
    const int tb = dgp.true_tb();
    const Eigen::VectorXd post = step(T, tb);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(T);
    constexpr double beta0 = 1.0;
    constexpr double varrho0 = 1.0;

    switch (dgp.model) {
        case Model::M1:
        case Model::M2: {
            const double a = dgp.model == Model::M1 ? 0.1 : 0.6;
            const double sd = dgp.model == Model::M1 ? 0.8 : 0.7;
            const Eigen::VectorXd e = ar1_series(rng, T, a, sd);
            Eigen::VectorXd y = beta0 * ones + dgp.delta0 * post + e;
            return {Sample(std::move(y), Eigen::MatrixXd(T, 0), ones), tb};
        }
        case Model::M3:
        case Model::M4:
        case Model::F1: {
            Eigen::VectorXd z;
            Eigen::VectorXd e(T);
            if (dgp.model == Model::F1) {
                z = arma11_series(rng, T, 0.3, -0.1);
                for (int t = 0; t < T; ++t) e(t) = rng.normal();
            } else if (dgp.model == Model::M3) {
                z = ar1_series(rng, T, 0.3, 1.0);
                for (int t = 0; t < T; ++t) e(t) = 1.1 * rng.normal();
            } else {
                z = ar1_series(rng, T, 0.5, 1.0);
                for (int t = 0; t < T; ++t) e(t) = rng.normal() * std::abs(z(t));
            }
            Eigen::VectorXd y = varrho0 * ones + beta0 * z + dgp.delta0 * z.cwiseProduct(post) + e;
            return {Sample(std::move(y), ones, z), tb};
        }
        case Model::M5: {
            constexpr double rho = 0.6;
            const double shift = 1.4 * rho * dgp.delta0;
            Eigen::VectorXd y(T);
            Eigen::MatrixXd lag(T, 1);
            double prev = 0.0;
            for (int t = 0; t < T; ++t) {
                lag(t, 0) = prev;
                y(t) = shift * post(t) + rho * prev + std::sqrt(0.5) * rng.normal();
                prev = y(t);
            }
            return {Sample(std::move(y), std::move(lag), ones), tb};
        }
    }
    throw Error(ErrorKind::config, "unhandled model");
}

ErrorMode default_error_mode(Model m) {
    return m == Model::M1 || m == Model::M2 ? ErrorMode::serial : ErrorMode::iid;
}

VarianceMode default_variance_mode(Model m) {
    return m == Model::M1 || m == Model::M2 ? VarianceMode::hac : VarianceMode::homoskedastic;
}

Method parse_method(const std::string& text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), '-', '_');
    static const std::pair<const char*, Method> table[] = {
        {"ols", Method::ols},           {"gl_cr", Method::gl_cr},
        {"gl_cr_iter", Method::gl_cr_iter}, {"gl_uni", Method::gl_uni},
        {"ols_cr_set", Method::ols_cr_set}, {"ols_cr", Method::ols_cr_set},
        {"gl_cr_set", Method::gl_cr_set},   {"gl_cr_iter_set", Method::gl_cr_iter_set},
        {"bai", Method::bai},           {"sup_wald", Method::sup_wald}};
    for (const auto& [name, m] : table) {
        if (s == name) return m;
    }
    throw Error(ErrorKind::config, "unknown method '" + text + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::ols: return "ols";
        case Method::gl_cr: return "gl_cr";
        case Method::gl_cr_iter: return "gl_cr_iter";
        case Method::gl_uni: return "gl_uni";
        case Method::ols_cr_set: return "ols_cr_set";
        case Method::gl_cr_set: return "gl_cr_set";
        case Method::gl_cr_iter_set: return "gl_cr_iter_set";
        case Method::bai: return "bai";
        case Method::sup_wald: return "sup_wald";
    }
    return "?";
}

std::vector<Method> parse_methods(const std::string& comma_list) {
    std::vector<Method> out;
    std::stringstream ss(comma_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
}

bool is_estimator(Method m) {
    return m == Method::ols || m == Method::gl_cr || m == Method::gl_cr_iter || m == Method::gl_uni;
}

bool is_set(Method m) {
    return m == Method::ols_cr_set || m == Method::gl_cr_set || m == Method::gl_cr_iter_set || m == Method::bai;
}

void McConfig::check() const {
    if (replications < 1) throw Error(ErrorKind::config, "replications must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
    if (cells.empty()) throw Error(ErrorKind::config, "no (lambda0, delta0) cells given");
    for (const auto& [lambda0, delta0] : cells) {
        DgpSpec{model, T, lambda0, delta0}.true_tb();
        if (!std::isfinite(delta0)) throw Error(ErrorKind::config, "delta0 must be finite");
    }
    if (inference.sim.n_draws < 1 || inference.sim.grid_points < 1 || inference.n_outer < 1) {
        throw Error(ErrorKind::config, "simulation sizes must be positive");
    }
    if (std::find(methods.begin(), methods.end(), Method::sup_wald) != methods.end()) {
        critical_values.lookup(1, sup_wald_trimming);  // every design has q = 1
    }
}

std::vector<MethodOutcome> run_methods(const Generated& data, const McConfig& cfg, std::uint64_t seed) {
    const Sample& sample = data.sample;
    InferenceConfig inf = cfg.inference;
    inf.sim.seed = seed;
    inf.sim.threads = 1;
    inf.error_mode = cfg.error_mode.value_or(default_error_mode(cfg.model));
    const BreakSpec spec;
    BreakSpec trimmed;
    trimmed.trimming = cfg.trimming;

    std::optional<LsStage> ls;
    std::optional<LsStage> ls_trimmed;
    std::optional<GlStage> gl;
    std::optional<IterStage> iter;
    std::optional<BreakFit> fit;
    auto need_ls = [&]() -> const LsStage& {
        if (!ls) ls = ls_stage(sample, spec, inf);
        return *ls;
    };
    // OLS baselines search the trimmed range, the GL pipelines the full one
    auto need_ls_trimmed = [&]() -> const LsStage& {
        if (cfg.trimming == 0.0) return need_ls();
        if (!ls_trimmed) ls_trimmed = ls_stage(sample, trimmed, inf);
        return *ls_trimmed;
    };
    auto need_fit = [&]() -> const BreakFit& {
        if (cfg.trimming == 0.0 && ls) return ls->fit;
        if (ls_trimmed) return ls_trimmed->fit;
        if (!fit) fit = estimate_break(sample, trimmed);
        return *fit;
    };
    auto need_full_fit = [&]() -> const BreakFit& {
        if (cfg.trimming == 0.0) return need_fit();
        return need_ls().fit;
    };
    auto need_gl = [&]() -> const GlStage& {
        if (!gl) gl = gl_stage(need_ls().fit, cr_prior(need_ls(), inf), PriorId::cr, inf);
        return *gl;
    };
    auto need_iter = [&]() -> const IterStage& {
        if (!iter) iter = iter_stage(sample, need_gl().estimate, inf);
        return *iter;
    };
    auto set_outcome = [&](const ConfidenceSet& set) {
        MethodOutcome o;
        o.covered = set.contains(data.true_tb);
        o.length = set.length();
        return o;
    };

    std::vector<MethodOutcome> out;
    out.reserve(cfg.methods.size());
    for (Method m : cfg.methods) {
        MethodOutcome o;
        switch (m) {
            case Method::ols: o.estimate = need_fit().tb_hat; break;
            case Method::gl_cr: o.estimate = need_gl().estimate; break;
            case Method::gl_cr_iter: o.estimate = need_iter().estimate; break;
            case Method::gl_uni: {
                const BreakFit& f = need_full_fit();
                o.estimate = gl_stage(f, std::vector<double>(static_cast<std::size_t>(f.range.count()), 1.0),
                                      PriorId::uniform, inf)
                                 .estimate;
                break;
            }
            case Method::ols_cr_set: o = set_outcome(confset_ols_cr(need_ls_trimmed(), cfg.alpha)); break;
            case Method::gl_cr_set:
                o = set_outcome(confset_gl_cr(need_ls(), need_gl(), sample.size(), cfg.alpha, inf));
                break;
            case Method::gl_cr_iter_set: o = set_outcome(confset_gl_cr_iter(need_iter(), cfg.alpha)); break;
            case Method::bai: {
                const BreakFit& f = need_fit();
                const LimitParams params = ls_trimmed ? ls_trimmed->params
                                           : (cfg.trimming == 0.0 && ls)
                                               ? ls->params
                                               : estimate_limit_params(sample, f, inf.error_mode, inf.lrv);
                o = set_outcome(bai_interval(sample, f, params, cfg.alpha, cfg.bai));
                break;
            }
            case Method::sup_wald: {
                const VarianceMode vm = cfg.variance_mode.value_or(default_variance_mode(cfg.model));
                o.reject = sup_wald(sample, cfg.sup_wald_trimming, vm, cfg.critical_values, inf.lrv).reject;
                break;
            }
        }
        out.push_back(o);
    }
    return out;
}

McReport run_study(const McConfig& cfg) {
    cfg.check();
    const auto start = std::chrono::steady_clock::now();
    McReport report;
    report.model = cfg.model;
    report.T = cfg.T;
    report.seed = cfg.master_seed;
    report.replications = cfg.replications;
    report.methods = cfg.methods;

    for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
        const DgpSpec dgp{cfg.model, cfg.T, cfg.cells[c].first, cfg.cells[c].second};
        const int true_tb = dgp.true_tb();
        CellReport cell;
        cell.cell_id = static_cast<int>(c);
        cell.lambda0 = dgp.lambda0;
        cell.delta0 = dgp.delta0;

        const auto reps = static_cast<std::size_t>(cfg.replications);
        std::vector<std::vector<MethodOutcome>> outcomes(reps);
        std::vector<char> failed(reps, 0);
        parallel_for(reps, cfg.threads, [&](std::size_t r) {
            Stream rng(derive_seed(cfg.master_seed, {c, r, stage::data}));
            const Generated data = generate(dgp, rng);
            try {
                outcomes[r] = run_methods(data, cfg, derive_seed(cfg.master_seed, {c, r, stage::methods}));
            } catch (const Error& e) {
                if (!e.is_numeric()) throw;
                failed[r] = 1;
            }
        });
        cell.failures = std::count(failed.begin(), failed.end(), 1);
        cell.used = static_cast<long>(reps) - cell.failures;
        if (static_cast<double>(cell.failures) > 0.01 * static_cast<double>(reps) || cell.used == 0) {
            cell.aborted = true;
            cell.abort_reason = std::to_string(cell.failures) + " of " + std::to_string(reps) +
                                " replications failed numerically";
            report.cells.push_back(std::move(cell));
            continue;
        }

        for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
            const Method m = cfg.methods[k];
            std::vector<const MethodOutcome*> rows;
            for (std::size_t r = 0; r < reps; ++r) {
                if (!failed[r]) rows.push_back(&outcomes[r][k]);
            }
            const double n = static_cast<double>(rows.size());
            if (is_estimator(m)) {
                std::vector<double> est;
                std::vector<double> abs_dev;
                std::vector<double> sq_dev;
                for (const auto* o : rows) {
                    est.push_back(o->estimate);
                    abs_dev.push_back(std::abs(o->estimate - true_tb));
                    sq_dev.push_back((o->estimate - true_tb) * (o->estimate - true_tb));
                }
                const double mean = mean_of(est);
                Accumulator ss;
                for (double v : est) ss.add((v - mean) * (v - mean));
                const double sd = rows.size() > 1 ? std::sqrt(ss.sum() / (n - 1.0)) : 0.0;
                cell.rows.push_back({m, "MAE", mean_of(abs_dev)});
                cell.rows.push_back({m, "Std", sd});
                cell.rows.push_back({m, "RMSE", std::sqrt(mean_of(sq_dev))});
                cell.rows.push_back({m, "Q25", type1_quantile(est, 0.25)});
                cell.rows.push_back({m, "Q75", type1_quantile(est, 0.75)});
            } else if (is_set(m)) {
                std::vector<double> cov;
                std::vector<double> len;
                for (const auto* o : rows) {
                    cov.push_back(o->covered ? 1.0 : 0.0);
                    len.push_back(o->length);
                }
                cell.rows.push_back({m, "coverage", mean_of(cov)});
                cell.rows.push_back({m, "length", mean_of(len)});
            } else {
                std::vector<double> rej;
                for (const auto* o : rows) rej.push_back(o->reject ? 1.0 : 0.0);
                cell.rows.push_back({m, "rejection", mean_of(rej)});
            }
        }
        report.cells.push_back(std::move(cell));
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void emit_report(std::ostream& out, const McReport& report) {
    out << "cell_id,model,lambda0,delta0,method,metric,value,replications,seed\n";
    for (const auto& cell : report.cells) {
        if (cell.aborted) continue;
        for (const auto& row : cell.rows) {
            out << cell.cell_id << ',' << model_name(report.model) << ',' << format_number(cell.lambda0) << ','
                << format_number(cell.delta0) << ',' << method_name(row.method) << ',' << row.metric << ','
                << format_number(row.value) << ',' << cell.used << ',' << report.seed << '\n';
        }
    }
}

DensityCompare density_compare(const DensityCompareConfig& cfg) {
    if (cfg.replications < 1 || cfg.posterior_draws < 1) {
        throw Error(ErrorKind::config, "replications and posterior draws must be positive");
    }
    const int T = cfg.dgp.T;
    const int true_tb = cfg.dgp.true_tb();
    const auto reps = static_cast<std::size_t>(cfg.replications);
    const ErrorMode mode = default_error_mode(cfg.dgp.model);

    struct Rep {
        bool ok = false;
        int tb_hat = 0;
        LimitParams params;  // evaluated at the true date
        std::vector<double> post;  // over 1..T-1
    };
    std::vector<Rep> slots(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t r) {
        Stream rng(derive_seed(cfg.master_seed, {0, r, stage::data}));
        const Generated data = generate(cfg.dgp, rng);
        InferenceConfig inf = cfg.inference;
        inf.error_mode = mode;
        inf.sim.n_draws = cfg.posterior_draws;
        inf.sim.threads = 1;
        inf.sim.seed = derive_seed(cfg.master_seed, {0, r, stage::methods});
        try {
            const LsStage ls = ls_stage(data.sample, BreakSpec{}, inf);
            const GlStage gl = gl_stage(ls.fit, cr_prior(ls, inf), PriorId::cr, inf);
            Rep& slot = slots[r];
            slot.tb_hat = ls.fit.tb_hat;
            slot.params = estimate_limit_params(data.sample, fit_at(data.sample, true_tb), mode, inf.lrv);
            slot.post.assign(static_cast<std::size_t>(T - 1), 0.0);
            for (int i = 0; i < gl.post.dist.size(); ++i) {
                slot.post[static_cast<std::size_t>(gl.post.dist.date(i) - 1)] = gl.post.dist.pmf[static_cast<std::size_t>(i)];
            }
            slot.ok = true;
        } catch (const Error& e) {
            if (!e.is_numeric()) throw;
        }
    });

    DensityCompare out;
    out.dates.resize(static_cast<std::size_t>(T - 1));
    for (int t = 1; t <= T - 1; ++t) out.dates[static_cast<std::size_t>(t - 1)] = t;
    std::vector<double> hist(static_cast<std::size_t>(T - 1), 0.0);
    std::vector<Accumulator> post(static_cast<std::size_t>(T - 1));
    std::vector<double> rho;
    std::vector<double> phi_z;
    std::vector<double> phi_e;
    long ok = 0;
    for (const Rep& s : slots) {
        if (!s.ok) {
            ++out.failures;
            continue;
        }
        ++ok;
        hist[static_cast<std::size_t>(s.tb_hat - 1)] += 1.0;
        for (std::size_t i = 0; i < post.size(); ++i) post[i].add(s.post[i]);
        if (!s.params.exact_fit) {
            rho.push_back(s.params.rho_hat);
            phi_z.push_back(s.params.phi_z);
            phi_e.push_back(s.params.phi_e);
        }
    }
    if (ok == 0 || rho.empty()) throw Error(ErrorKind::numeric, "every replication failed");
    out.finite_sample.resize(hist.size());
    out.quasi_posterior.resize(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) {
        out.finite_sample[i] = hist[i] / static_cast<double>(ok);
        out.quasi_posterior[i] = post[i].sum() / static_cast<double>(ok);
    }

    out.params.sample_size = T;
    out.params.tb_hat = true_tb;
    out.params.lambda_hat = static_cast<double>(true_tb) / T;
    out.params.rho_hat = median_of(rho);
    out.params.phi_z = median_of(phi_z);
    out.params.phi_e = median_of(phi_e);
    CrSimConfig sim = cfg.inference.sim;
    sim.seed = derive_seed(cfg.master_seed, {stage::cr_at_ls});
    sim.threads = cfg.threads;
    out.cr_density = simulate_cr_distribution(out.params, true_tb, T, sim).pmf;
    return out;
}

void write_density_compare(std::ostream& out, const DensityCompare& dc) {
    out << "date,finite_sample,cr_density,quasi_posterior\n";
    for (std::size_t i = 0; i < dc.dates.size(); ++i) {
        out << dc.dates[i] << ',' << format_number(dc.finite_sample[i]) << ',' << format_number(dc.cr_density[i])
            << ',' << format_number(dc.quasi_posterior[i]) << '\n';
    }
}

}  // namespace crbreak
