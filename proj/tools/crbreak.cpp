// crbreak: break-date estimation, confidence sets and simulation studies.
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crbreak/errors.hpp"
#include "crbreak/hdr.hpp"
#include "crbreak/laplace.hpp"
#include "crbreak/lsq.hpp"
#include "crbreak/mc.hpp"
#include "crbreak/model.hpp"

namespace {

using namespace crbreak;

constexpr std::uint64_t kDefaultSeed = 20240601;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> split_numbers(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, std::string("bad number '") + item + "' in --" + what);
        }
    }
    return out;
}

// Flat JSON object -> "--key value" tokens, placed before the real flags so
// that later (command-line) occurrences win.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, "config file '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::config, "config file must hold a flat JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : doc.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back(flag);
        } else if (value.is_string()) {
            tokens.push_back(flag);
            tokens.push_back(value.get<std::string>());
        } else if (value.is_number_integer()) {
            tokens.push_back(flag);
            tokens.push_back(std::to_string(value.get<long long>()));
        } else if (value.is_number()) {
            std::ostringstream os;
            os.precision(17);
            os << value.get<double>();
            tokens.push_back(flag);
            tokens.push_back(os.str());
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            tokens.push_back(flag);
            tokens.push_back(joined);
        } else {
            throw Error(ErrorKind::config, "config key '" + key + "' must be a scalar or a list");
        }
    }
    return tokens;
}

struct Common {
    std::string config;
    std::uint64_t seed = kDefaultSeed;
    int threads = 1;
};

struct DataOpts {
    std::string input;
    std::string y;
    std::string z;
    std::string d;
    std::string label;
    int search_lo = -1;
    int search_hi = -1;
    double trimming = 0.0;

    void attach(CLI::App* app) {
        app->add_option("--input", input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        app->add_option("--y", y, "dependent variable column")->required();
        app->add_option("--z", z, "breaking regressor columns (comma separated)")->required();
        app->add_option("--d", d, "non-breaking regressor columns (comma separated)");
        app->add_option("--label", label, "date label column");
        app->add_option("--search-lo", search_lo, "first candidate date");
        app->add_option("--search-hi", search_hi, "last candidate date");
        app->add_option("--trimming", trimming, "fraction trimmed at each end");
    }

    Sample load() const {
        ColumnSchema schema;
        schema.y = y;
        schema.z = split_list(z);
        schema.d = split_list(d);
        schema.label = label;
        return load_sample(input, schema);
    }

    BreakSpec spec() const {
        BreakSpec s;
        if (search_lo >= 0) s.search_lo = search_lo;
        if (search_hi >= 0) s.search_hi = search_hi;
        s.trimming = trimming;
        return s;
    }
};

struct SimOpts {
    long n_draws = 10000;
    int grid_points = 2000;
    long n_outer = 2000;
    double prior_bandwidth = 1.0;
    double temperature = 1.0;
    std::string loss = "absolute";
    std::string error_mode = "iid";
    std::string domain = "sample";

    void attach(CLI::App* app, bool with_error_mode = true) {
        app->add_option("--n-draws", n_draws, "limit-process draws")->check(CLI::PositiveNumber);
        app->add_option("--grid-points", grid_points, "grid points across the sample")->check(CLI::PositiveNumber);
        app->add_option("--n-outer", n_outer, "outer draws for the GL sampling distribution")
            ->check(CLI::PositiveNumber);
        app->add_option("--prior-bandwidth", prior_bandwidth, "Gaussian smoothing of the CR prior (dates)")
            ->check(CLI::PositiveNumber);
        app->add_option("--temperature", temperature, "quasi-posterior temperature")->check(CLI::PositiveNumber);
        app->add_option("--loss", loss, "absolute | squared | poly:m | check:tau");
        app->add_option("--domain", domain, "limit domain width: sample (T*rho) | literal (theta*rho)")
            ->check(CLI::IsMember({"sample", "literal"}));
        if (with_error_mode) {
            app->add_option("--error-mode", error_mode, "iid | serial")->check(CLI::IsMember({"iid", "serial"}));
        }
    }

    InferenceConfig inference(const Common& c) const {
        InferenceConfig cfg;
        cfg.sim.n_draws = n_draws;
        cfg.sim.grid_points = grid_points;
        cfg.sim.seed = c.seed;
        cfg.sim.threads = c.threads;
        cfg.n_outer = n_outer;
        cfg.prior_bandwidth = prior_bandwidth;
        cfg.temperature = temperature;
        cfg.loss = Loss::parse(loss);
        cfg.error_mode = error_mode == "serial" ? ErrorMode::serial : ErrorMode::iid;
        cfg.sim.scale = domain == "literal" ? DomainScale::literal : DomainScale::sample;
        return cfg;
    }
};

std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") return std::cout;
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    return *holder;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int run_fit(const DataOpts& data, const std::string& profile_out) {
    const Sample sample = data.load();
    const BreakFit fit = estimate_break(sample, data.spec());
    std::cout << "tb_hat=" << fit.tb_hat << '\n'
              << "lambda_hat=" << fmt(fit.lambda_hat()) << '\n'
              << "ssr=" << fmt(fit.fit_at_tb.ssr) << '\n'
              << "criterion_q=" << fmt(fit.fit_at_tb.criterion_q) << '\n';
    for (Eigen::Index j = 0; j < fit.fit_at_tb.beta_hat.size(); ++j) {
        std::cout << "beta_hat[" << j << "]=" << fmt(fit.fit_at_tb.beta_hat(j)) << '\n';
    }
    for (Eigen::Index j = 0; j < fit.fit_at_tb.delta_hat.size(); ++j) {
        std::cout << "delta_hat[" << j << "]=" << fmt(fit.fit_at_tb.delta_hat(j)) << '\n';
    }
    if (!profile_out.empty()) {
        std::unique_ptr<std::ofstream> holder;
        std::ostream& out = open_output(profile_out, holder);
        out << "date,criterion_q,ssr\n";
        for (int i = 0; i < fit.range.count(); ++i) {
            out << fit.range.lo + i << ',' << fmt(fit.q_profile[static_cast<std::size_t>(i)]) << ','
                << fmt(fit.ssr_profile[static_cast<std::size_t>(i)]) << '\n';
        }
    }
    return 0;
}

int run_confset(const DataOpts& data, const SimOpts& sim, const Common& common, const std::string& methods,
                double alpha, const std::string& out_path) {
    const Sample sample = data.load();
    const BreakSpec spec = data.spec();
    const InferenceConfig cfg = sim.inference(common);
    std::vector<ConfidenceSet> sets;
    std::optional<LsStage> ls;
    std::optional<GlStage> gl;
    auto need_ls = [&]() -> const LsStage& {
        if (!ls) ls = ls_stage(sample, spec, cfg);
        return *ls;
    };
    auto need_gl = [&]() -> const GlStage& {
        if (!gl) gl = gl_stage(need_ls().fit, cr_prior(need_ls(), cfg), PriorId::cr, cfg);
        return *gl;
    };
    for (const auto& name : split_list(methods)) {
        const Method m = parse_method(name);
        switch (m) {
            case Method::ols_cr_set: sets.push_back(confset_ols_cr(need_ls(), alpha)); break;
            case Method::gl_cr:
            case Method::gl_cr_set: sets.push_back(confset_gl_cr(need_ls(), need_gl(), sample.size(), alpha, cfg)); break;
            case Method::gl_cr_iter:
            case Method::gl_cr_iter_set:
                sets.push_back(confset_gl_cr_iter(iter_stage(sample, need_gl().estimate, cfg), alpha));
                break;
            case Method::bai: {
                ArgmaxQuantileConfig q;
                q.threads = common.threads;
                sets.push_back(bai_interval(sample, need_ls().fit, need_ls().params, alpha, q));
                break;
            }
            default: throw Error(ErrorKind::config, "'" + name + "' is not a confidence-set method");
        }
    }
    std::unique_ptr<std::ofstream> holder;
    write_confidence_sets(open_output(out_path, holder), sets);
    for (const auto& s : sets) {
        std::cerr << s.method << ": " << s.length() << " dates, mass " << s.achieved_mass << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single structural break: estimation, confidence sets and simulation studies"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--config", common.config, "JSON file with flat keys mirroring the flags");
        sub->add_option("--seed", common.seed, "master seed");
        sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
    };

    // fit
    auto* fit = app.add_subcommand("fit", "least-squares break date and criterion profile");
    add_common(fit);
    DataOpts fit_data;
    fit_data.attach(fit);
    std::string profile_out;
    fit->add_option("--profile-out", profile_out, "write the criterion profile as CSV");

    // confset
    auto* confset = app.add_subcommand("confset", "confidence sets for the break date");
    add_common(confset);
    DataOpts cs_data;
    cs_data.attach(confset);
    SimOpts cs_sim;
    cs_sim.attach(confset);
    std::string cs_methods = "ols-cr";
    double cs_alpha = 0.05;
    std::string cs_out;
    confset->add_option("--method", cs_methods, "ols-cr, gl-cr, gl-cr-iter, bai (comma separated)");
    confset->add_option("--alpha", cs_alpha, "1 - confidence level")->check(CLI::Range(0.0, 1.0));
    confset->add_option("--out", cs_out, "output CSV (stdout when omitted)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "continuous-record distribution for given plug-ins");
    add_common(simulate);
    double sim_phi_z = 1.0;
    double sim_phi_e = 1.0;
    double sim_rho = 0.01;
    int sim_T = 100;
    int sim_center = 50;
    long sim_draws = 100000;
    int sim_grid = 2000;
    std::string sim_out;
    std::string sim_sstar;
    simulate->add_option("--phi-z", sim_phi_z, "post/pre regressor moment ratio")->check(CLI::PositiveNumber);
    simulate->add_option("--phi-e", sim_phi_e, "post/pre residual-weighted moment ratio")->check(CLI::PositiveNumber);
    simulate->add_option("--rho", sim_rho, "per-observation scale")->check(CLI::PositiveNumber);
    simulate->add_option("--T", sim_T, "sample size")->check(CLI::Range(2, 1000000));
    simulate->add_option("--center", sim_center, "centering date");
    simulate->add_option("--n-draws", sim_draws, "argmax draws")->check(CLI::PositiveNumber);
    simulate->add_option("--grid-points", sim_grid, "grid points across the sample")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim_out, "pmf CSV (date,mass); stdout when omitted");
    simulate->add_option("--s-star-out", sim_sstar, "raw argmax draws, one column");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo study");
    add_common(mc);
    std::string mc_model = "M1";
    std::string mc_lambda = "0.5";
    std::string mc_delta = "1.0";
    long mc_reps = 2000;
    int mc_T = 100;
    std::string mc_methods = "ols,gl-cr,gl-cr-iter,gl-uni";
    double mc_alpha = 0.05;
    bool mc_fast = false;
    std::string mc_out;
    std::string mc_error_mode;
    SimOpts mc_sim;
    mc_sim.attach(mc, false);
    mc->add_option("--model", mc_model, "M1..M5 or F1");
    mc->add_option("--lambda0", mc_lambda, "break fractions (comma separated)");
    mc->add_option("--delta0", mc_delta, "break magnitudes (comma separated)");
    mc->add_option("--reps", mc_reps, "replications per cell")->check(CLI::PositiveNumber);
    mc->add_option("--T", mc_T, "sample size")->check(CLI::Range(10, 100000));
    mc->add_option("--methods", mc_methods,
                   "ols, gl-cr, gl-cr-iter, gl-uni, ols-cr-set, gl-cr-set, gl-cr-iter-set, bai, sup-wald");
    mc->add_option("--alpha", mc_alpha, "1 - confidence level")->check(CLI::Range(0.0, 1.0));
    mc->add_option("--error-mode", mc_error_mode, "override the per-model error treatment")
        ->check(CLI::IsMember({"iid", "serial"}));
    double mc_trimming = 0.15;
    mc->add_option("--trimming", mc_trimming, "trimming of the LS search range")->check(CLI::Range(0.0, 0.49));
    mc->add_flag("--fast", mc_fast, "reduced simulation sizes for smoke runs");
    mc->add_option("--out", mc_out, "report CSV (stdout when omitted)");

    // density-compare
    auto* dc = app.add_subcommand("density-compare", "finite-sample vs continuous-record densities");
    add_common(dc);
    std::string dc_model = "F1";
    double dc_lambda = 0.5;
    double dc_delta = 0.3;
    long dc_reps = 2000;
    int dc_T = 100;
    long dc_draws = 100000;
    long dc_post_draws = 1000;
    int dc_grid = 2000;
    std::string dc_out;
    dc->add_option("--model", dc_model, "M1..M5 or F1");
    dc->add_option("--lambda0", dc_lambda, "break fraction");
    dc->add_option("--delta0", dc_delta, "break magnitude");
    dc->add_option("--reps", dc_reps, "replications for the finite-sample histogram")->check(CLI::PositiveNumber);
    dc->add_option("--T", dc_T, "sample size")->check(CLI::Range(10, 100000));
    dc->add_option("--n-draws", dc_draws, "draws for the CR density")->check(CLI::PositiveNumber);
    dc->add_option("--posterior-draws", dc_post_draws, "CR draws behind each replication's prior")
        ->check(CLI::PositiveNumber);
    dc->add_option("--grid-points", dc_grid, "grid points across the sample")->check(CLI::PositiveNumber);
    dc->add_option("--out", dc_out, "CSV output (stdout when omitted)");

    // Expand --config before parsing.
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size()) {
                path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                path = args[i].substr(9);
            }
            if (!path.empty()) {
                const auto tokens = config_tokens(path);
                const std::size_t at = args.empty() ? 0 : 1;
                args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(at, args.size())), tokens.begin(),
                            tokens.end());
                break;
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*fit) return run_fit(fit_data, profile_out);
        if (*confset) return run_confset(cs_data, cs_sim, common, cs_methods, cs_alpha, cs_out);
        if (*simulate) {
            LimitParams params;
            params.sample_size = sim_T;
            params.tb_hat = sim_center;
            params.lambda_hat = static_cast<double>(sim_center) / sim_T;
            params.phi_z = sim_phi_z;
            params.phi_e = sim_phi_e;
            params.rho_hat = sim_rho;
            CrSimConfig cfg;
            cfg.n_draws = sim_draws;
            cfg.grid_points = sim_grid;
            cfg.seed = common.seed;
            cfg.threads = common.threads;
            std::vector<double> s_star;
            const DateDistribution dist =
                simulate_cr_distribution(params, sim_center, sim_T, cfg, sim_sstar.empty() ? nullptr : &s_star);
            std::unique_ptr<std::ofstream> holder;
            std::ostream& out = open_output(sim_out, holder);
            out << "date,mass\n";
            for (int i = 0; i < dist.size(); ++i) out << dist.date(i) << ',' << fmt(dist.pmf[static_cast<std::size_t>(i)]) << '\n';
            if (!sim_sstar.empty()) {
                std::unique_ptr<std::ofstream> h2;
                std::ostream& so = open_output(sim_sstar, h2);
                so << "s_star\n";
                for (double s : s_star) so << fmt(s) << '\n';
            }
            return 0;
        }
        if (*mc) {
            McConfig cfg;
            cfg.model = parse_model(mc_model);
            cfg.T = mc_T;
            for (double l : split_numbers(mc_lambda, "lambda0")) {
                for (double d : split_numbers(mc_delta, "delta0")) cfg.cells.emplace_back(l, d);
            }
            cfg.replications = mc_reps;
            cfg.master_seed = common.seed;
            cfg.methods = parse_methods(mc_methods);
            cfg.alpha = mc_alpha;
            cfg.trimming = mc_trimming;
            cfg.inference = mc_sim.inference(common);
            if (!mc_error_mode.empty()) {
                cfg.error_mode = mc_error_mode == "serial" ? ErrorMode::serial : ErrorMode::iid;
            }
            if (mc_fast) {
                cfg.inference.sim.n_draws = std::min<long>(cfg.inference.sim.n_draws, 500);
                cfg.inference.sim.grid_points = std::min(cfg.inference.sim.grid_points, 500);
                cfg.inference.n_outer = std::min<long>(cfg.inference.n_outer, 200);
                cfg.bai.n_draws = 5000;
            }
            cfg.threads = common.threads;
            cfg.bai.threads = 1;
            const McReport report = run_study(cfg);
            std::unique_ptr<std::ofstream> holder;
            emit_report(open_output(mc_out, holder), report);
            bool aborted = false;
            for (const auto& cell : report.cells) {
                if (cell.failures > 0 || cell.aborted) {
                    std::cerr << "cell " << cell.cell_id << ": " << cell.failures << " failed replications"
                              << (cell.aborted ? " (aborted: " + cell.abort_reason + ")" : "") << '\n';
                }
                aborted = aborted || cell.aborted;
            }
            std::cerr << "wall time " << report.wall_seconds << " s\n";
            return aborted ? kExitNumeric : 0;
        }
        if (*dc) {
            DensityCompareConfig cfg;
            cfg.dgp = DgpSpec{parse_model(dc_model), dc_T, dc_lambda, dc_delta};
            cfg.dgp.true_tb();
            cfg.replications = dc_reps;
            cfg.master_seed = common.seed;
            cfg.inference.sim.n_draws = dc_draws;
            cfg.inference.sim.grid_points = dc_grid;
            cfg.posterior_draws = dc_post_draws;
            cfg.threads = common.threads;
            const DensityCompare result = density_compare(cfg);
            std::unique_ptr<std::ofstream> holder;
            write_density_compare(open_output(dc_out, holder), result);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return e.is_numeric() ? kExitNumeric : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
