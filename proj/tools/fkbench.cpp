// fkbench: exact oracles, particle simulations and fluctuation checks for
// finite-state Feynman-Kac models.
//
// Exit status: 0 PASS (or plain success), 1 FAIL or verification error,
// 2 usage or configuration error.

#include "fkbench/constants.hpp"
#include "fkbench/errors.hpp"
#include "fkbench/flow.hpp"
#include "fkbench/io.hpp"
#include "fkbench/lab.hpp"
#include "fkbench/particles.hpp"
#include "fkbench/stats.hpp"
#include "fkbench/zoo.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fkbench;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

// Raised for problems with the invocation itself rather than the experiment.
struct ConfigError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Options
{
    std::string model_file;
    std::string zoo;
    std::vector<std::string> params;
    std::string function_file;
    std::optional<int> horizon;
    std::uint64_t seed = 1;
    std::string out = ".";

    int n_particles = 1000;
    std::vector<int> n_grid = {100, 400, 1600, 6400};
    int reps = 0;
    std::vector<double> eps_grid;
    int p_max = 6;
    bool check_doob = false;
    bool per_step = false;
};

struct Setup
{
    FeynmanKacModel model;
    McKeanSpec spec;
    TestFunction function;
    int n = 0;
    json source;
};

ZooParams parse_params(const std::vector<std::string>& items)
{
    ZooParams params;
    for (const auto& item : items)
    {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--param expects key=value, got '" + item + "'");
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try
        {
            v = std::stod(value, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used != value.size() || value.empty())
            throw ConfigError("--param " + item.substr(0, eq) + ": '" + value + "' is not a number");
        params[item.substr(0, eq)] = v;
    }
    return params;
}

Setup load(const Options& o)
{
    if (o.model_file.empty() == o.zoo.empty())
        throw ConfigError("give exactly one of --model FILE or --zoo NAME");

    Setup s;
    if (!o.zoo.empty())
    {
        ZooParams params = parse_params(o.params);
        if (o.horizon && !params.contains("horizon"))
        {
            for (const auto& item : zoo_list())
            {
                if (item.name == o.zoo && item.defaults.contains("horizon"))
                    params["horizon"] = *o.horizon;
            }
        }
        ZooEntry entry = build(o.zoo, params);
        s.model = std::move(entry.model);
        s.spec = std::move(entry.spec);
        s.function = std::move(entry.function);
        s.source = {{"zoo", o.zoo}, {"params", entry.params}};
    }
    else
    {
        if (!o.params.empty())
            throw ConfigError("--param only applies to --zoo entries");
        try
        {
            model_from_json(read_json_file(o.model_file), s.model, s.spec);
            validate_model(s.model);
            validate_spec(s.model, s.spec);
        }
        catch (const Error& e)
        {
            throw ConfigError(o.model_file + ": " + e.what());
        }
        s.source = {{"model_file", fs::absolute(o.model_file).string()}};
    }

    if (!o.function_file.empty())
    {
        try
        {
            s.function = function_from_json(read_json_file(o.function_file));
        }
        catch (const Error& e)
        {
            throw ConfigError(o.function_file + ": " + e.what());
        }
        s.source["function_file"] = fs::absolute(o.function_file).string();
    }
    else if (!o.model_file.empty())
    {
        throw ConfigError("--model needs --function FILE");
    }

    s.n = o.horizon.value_or(s.model.horizon);
    if (s.n < 0 || s.n > s.model.horizon)
    {
        throw ConfigError("--horizon " + std::to_string(s.n) + " outside [0, "
                          + std::to_string(s.model.horizon) + "]");
    }
    try
    {
        validate_function(s.model, s.function, s.n);
    }
    catch (const Error& e)
    {
        throw ConfigError(std::string("test function: ") + e.what());
    }
    return s;
}

json base_config(const std::string& command, const Options& o, const Setup& s)
{
    json config = {{"command", command}, {"source", s.source}, {"horizon", s.n},
                   {"seed", o.seed},     {"epsilons", s.spec.epsilons}};
    return config;
}

json header(const json& config)
{
    return {{"tool", "fkbench"}, {"version", FKBENCH_VERSION}, {"seed", config.at("seed")},
            {"config", config}};
}

fs::path output_path(const Options& o, const std::string& file)
{
    const fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir / file;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    std::cout << "wrote " << path.string() << '\n';
}

std::string num(double v)
{
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

int threads() { return default_thread_count(); }

int pass_exit(bool pass)
{
    std::cout << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitPass : kExitFail;
}

// -----------------------------------------------------------------------------

json table(const FlowAnalytics& flow, const std::vector<std::vector<double>>& rows)
{
    json out = json::array();
    for (int p = 0; p <= flow.horizon(); ++p)
    {
        json row = json::array();
        for (int n = p; n <= flow.horizon(); ++n)
            row.push_back(rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(n)]);
        out.push_back(row);
    }
    return out;
}

int cmd_oracle(const Options& o)
{
    const Setup s = load(o);
    const FlowAnalytics flow = analyze(s.model, s.spec, s.function, s.n);
    const McKeanGamma gamma = mckean_gamma(s.spec);

    json report = header(base_config("oracle", o, s));
    json etas = json::array();
    for (const auto& eta : flow.etas)
        etas.push_back(vector_to_json(eta));
    report["eta"] = etas;
    report["log_gamma1"] = flow.log_gamma1;
    report["beta"] = table(flow, flow.betas);
    report["ratio"] = table(flow, flow.ratios);
    report["table_layout"] = "row p lists entries for n = p..horizon";
    report["b"] = flow.b_const;
    json a3 = json::array();
    for (int n = 0; n <= flow.horizon(); ++n)
        a3.push_back(a3_bound(flow, n, gamma.combined));
    report["a3"] = a3;
    report["delta_c"] = flow.delta_c;
    report["sigma_sq"] = flow.sigma_sq;
    report["eta_f"] = flow.eta(s.n).dot(s.function.at(s.n));
    report["gamma"] = {{"gamma", gamma.gamma},
                       {"gamma_prime", gamma.gamma_prime},
                       {"combined", gamma.combined},
                       {"tilde", gamma.tilde}};
    json d = json::object();
    for (int p = 1; p <= 8; ++p)
        d[std::to_string(p)] = burkholder_d(p);
    report["burkholder_d"] = d;

    write_json(output_path(o, "oracle.json"), report);
    std::cout << "sigma_" << s.n << "^2(f) = " << num(flow.sigma_sq) << ", b(" << s.n
              << ") = " << num(flow.b_const.at(static_cast<std::size_t>(s.n))) << '\n';
    return kExitPass;
}

int cmd_simulate(const Options& o)
{
    const Setup s = load(o);
    const FlowAnalytics flow = analyze(s.model, s.spec, s.function, s.n);
    const int reps = o.reps > 0 ? o.reps : 100;

    RunConfig config;
    config.n_particles = o.n_particles;
    config.seed = o.seed;
    config.horizon = s.n;
    config.record.doob_residuals = o.check_doob;
    config.record.per_step = o.per_step;
    const auto stats = simulate_replicates(config, s.spec, s.model, s.function, flow, reps,
                                           {threads(), false});

    json resolved = base_config("simulate", o, s);
    resolved["N"] = o.n_particles;
    resolved["reps"] = reps;
    resolved["check_doob"] = o.check_doob;
    resolved["per_step"] = o.per_step;

    const fs::path path = output_path(o, "replicates.csv");
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << "# fkbench " << FKBENCH_VERSION << '\n';
    out << "# seed " << o.seed << '\n';
    out << "# config " << resolved.dump() << '\n';
    out << "replicate_id,N,n,W,L_terminal,B_terminal,C_N,max_abs_dev";
    if (o.check_doob)
        out << ",doob_residual_am,doob_residual_wbl";
    if (o.per_step)
    {
        for (int p = 0; p <= s.n; ++p)
            out << ",delta_m_" << p;
        for (int p = 0; p <= s.n; ++p)
            out << ",delta_c_" << p;
    }
    out << '\n';

    double worst_residual = 0.0;
    for (const auto& r : stats)
    {
        out << r.replicate << ',' << r.n_particles << ',' << r.time << ',' << num(r.w) << ','
            << num(r.l_terminal) << ',' << num(r.b_terminal) << ',' << num(r.c_n) << ','
            << num(r.max_deviation);
        if (o.check_doob)
        {
            out << ',' << num(*r.residual_am) << ',' << num(*r.residual_wbl);
            worst_residual = std::max({worst_residual, *r.residual_am, *r.residual_wbl});
        }
        for (double v : r.delta_m)
            out << ',' << num(v);
        for (double v : r.delta_c)
            out << ',' << num(v);
        out << '\n';
    }
    std::cout << "wrote " << path.string() << " (" << reps << " replicates)\n";
    if (o.check_doob)
    {
        std::cout << "max Doob residual " << num(worst_residual) << '\n';
        return pass_exit(worst_residual <= 1e-10);
    }
    return kExitPass;
}

int cmd_verify_clt(const Options& o)
{
    const Setup s = load(o);
    const int reps = o.reps > 0 ? o.reps : 2000;
    ExperimentOptions options;
    options.threads = threads();
    const RateReport r = clt_rate_experiment(s.model, s.spec, s.function, s.n, o.n_grid, reps, o.seed,
                                             options);

    json resolved = base_config("verify clt", o, s);
    resolved["N_grid"] = o.n_grid;
    resolved["reps"] = reps;
    resolved["bootstrap_resamples"] = r.bootstrap_resamples;

    json report = header(resolved);
    report["sigma"] = r.sigma;
    report["distances"] = r.distances;
    report["slope"] = r.slope;
    report["intercept"] = r.intercept;
    report["slope_band"] = {r.slope_low, r.slope_high};
    report["slope_window"] = {kRateSlopeLow, kRateSlopeHigh};
    report["noise_allowance"] = r.noise_allowance;
    report["pass"] = r.pass;
    write_json(output_path(o, "clt.json"), report);

    // gnuplot-ready: log N, log D_N
    const fs::path dat = output_path(o, "clt_distances.dat");
    std::ofstream out(dat);
    out << "# fkbench " << FKBENCH_VERSION << " seed " << o.seed << '\n';
    out << "# config " << resolved.dump() << '\n';
    out << "# N D_N log_N log_D_N\n";
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    {
        out << r.n_grid[i] << ' ' << num(r.distances[i]) << ' ' << num(std::log(r.n_grid[i])) << ' '
            << num(std::log(r.distances[i])) << '\n';
    }
    std::cout << "wrote " << dat.string() << '\n';

    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
        std::cout << "N = " << r.n_grid[i] << "  D_N = " << num(r.distances[i]) << '\n';
    std::cout << "slope " << num(r.slope) << " (95% band " << num(r.slope_low) << ", "
              << num(r.slope_high) << ")\n";
    return pass_exit(r.pass);
}

json concentration_json(const ConcentrationReport& r)
{
    json rows = json::array();
    for (const auto& row : r.rows)
    {
        rows.push_back({{"eps", row.eps},
                        {"empirical", row.empirical},
                        {"standard_error", row.standard_error},
                        {"bound", row.bound},
                        {"allowance", row.allowance},
                        {"pass", row.pass}});
    }
    return {{"statistic", r.statistic}, {"N", r.n_particles}, {"n", r.time},
            {"constant", r.constant},   {"rows", rows},        {"pass", r.pass}};
}

int cmd_verify_concentration(const Options& o)
{
    const Setup s = load(o);
    const int reps = o.reps > 0 ? o.reps : 2000;
    const std::vector<double> grid =
        o.eps_grid.empty() ? default_eps_grid(o.n_particles, oscillation(s.function.at(s.n))) : o.eps_grid;
    ExperimentOptions options;
    options.threads = threads();
    const ConcentrationReport eta = concentration_experiment(s.model, s.spec, s.function, s.n,
                                                             o.n_particles, grid, reps, o.seed, options);
    const ConcentrationReport dc = delta_c_concentration_experiment(
        s.model, s.spec, s.function, s.n, o.n_particles, grid, reps, o.seed, options);

    json resolved = base_config("verify concentration", o, s);
    resolved["N"] = o.n_particles;
    resolved["reps"] = reps;
    resolved["eps_grid"] = grid;
    json report = header(resolved);
    report["eta"] = concentration_json(eta);
    report["delta_c"] = concentration_json(dc);
    report["pass"] = eta.pass && dc.pass;
    write_json(output_path(o, "concentration.json"), report);

    for (const auto* r : {&eta, &dc})
    {
        std::cout << r->statistic << " (constant " << num(r->constant) << ")\n";
        for (const auto& row : r->rows)
        {
            std::cout << "  eps " << num(row.eps) << "  empirical " << num(row.empirical) << "  bound "
                      << num(row.bound) << (row.pass ? "" : "  FAIL") << '\n';
        }
    }
    return pass_exit(eta.pass && dc.pass);
}

int cmd_verify_moments(const Options& o)
{
    const Setup s = load(o);
    const int reps = o.reps > 0 ? o.reps : 2000;
    ExperimentOptions options;
    options.threads = threads();
    const MomentReport r = lp_moment_experiment(s.model, s.spec, s.function, s.n, o.n_particles,
                                                o.p_max, reps, o.seed, options);

    json resolved = base_config("verify moments", o, s);
    resolved["N"] = o.n_particles;
    resolved["reps"] = reps;
    resolved["p_max"] = o.p_max;
    json report = header(resolved);
    json rows = json::array();
    for (const auto& row : r.rows)
    {
        rows.push_back({{"kind", row.kind}, {"p", row.p}, {"lhs", row.lhs}, {"rhs", row.rhs},
                        {"allowance", row.allowance}, {"pass", row.pass}});
        std::cout << row.kind << " p=" << row.p << "  " << num(row.lhs) << " <= " << num(row.rhs)
                  << (row.pass ? "" : "  FAIL") << '\n';
    }
    report["b"] = r.b;
    report["rows"] = rows;
    report["pass"] = r.pass;
    write_json(output_path(o, "moments.json"), report);
    return pass_exit(r.pass);
}

int cmd_verify_stein(const Options& o)
{
    const Setup s = load(o);
    const int reps = o.reps > 0 ? o.reps : 10000;
    const FlowAnalytics flow = analyze(s.model, s.spec, s.function, s.n);
    RunConfig config;
    config.n_particles = o.n_particles;
    config.seed = o.seed;
    config.horizon = s.n;
    const auto stats = simulate_replicates(config, s.spec, s.model, s.function, flow, reps,
                                           {threads(), true});
    const double sigma = std::sqrt(flow.sigma_sq);
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;
    for (const auto& r : stats)
    {
        x.push_back(r.l_terminal / sigma);
        y.push_back(r.b_terminal / sigma);
        w.push_back(*r.w_normalized);
    }
    const SteinCheck stein = stein_check(x, y);
    const double density = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const double kolmogorov = kolmogorov_distance(EcdfSample(w), 1.0);
    const double smoothing = smoothing_bound(empirical_cf(w), normal_cf(0.0, 1.0), 10.0, density);
    const bool pass = stein.pass && smoothing >= kolmogorov;

    json resolved = base_config("verify stein", o, s);
    resolved["N"] = o.n_particles;
    resolved["reps"] = reps;
    resolved["smoothing_a"] = 10.0;
    json report = header(resolved);
    report["stein"] = {{"lhs", stein.lhs},     {"base", stein.base},   {"cross", stein.cross},
                       {"shift", stein.shift}, {"rhs", stein.rhs},     {"allowance", stein.allowance},
                       {"pass", stein.pass}};
    report["smoothing"] = {{"kolmogorov", kolmogorov}, {"bound", smoothing}};
    report["pass"] = pass;
    write_json(output_path(o, "stein.json"), report);
    std::cout << "Stein: " << num(stein.lhs) << " <= " << num(stein.rhs) << " + " << num(stein.allowance)
              << '\n'
              << "smoothing: " << num(kolmogorov) << " <= " << num(smoothing) << '\n';
    return pass_exit(pass);
}

int cmd_zoo_list()
{
    json out = json::array();
    for (const auto& item : zoo_list())
        out.push_back({{"name", item.name}, {"defaults", item.defaults}, {"notes", item.notes}});
    std::cout << out.dump(2) << '\n';
    return kExitPass;
}

int cmd_zoo_export(const Options& o, const std::string& name)
{
    const ZooEntry entry = build(name, parse_params(o.params));
    json model = model_to_json(entry.model, entry.spec);
    json function = function_to_json(entry.function);
    const json resolved = {{"command", "zoo export"}, {"zoo", name}, {"params", entry.params},
                           {"seed", entry.params.contains("seed") ? json(entry.params.at("seed")) : json(nullptr)}};
    model["meta"] = header(resolved);
    function["meta"] = header(resolved);
    write_json(output_path(o, name + ".model.json"), model);
    write_json(output_path(o, name + ".function.json"), function);
    return kExitPass;
}

void add_source(CLI::App* cmd, Options& o)
{
    auto* model = cmd->add_option("--model", o.model_file, "model JSON file");
    auto* zoo = cmd->add_option("--zoo", o.zoo, "zoo entry name");
    model->excludes(zoo);
    cmd->add_option("--param", o.params, "zoo parameter override key=value (repeatable)");
    cmd->add_option("--function", o.function_file, "test function JSON file");
    cmd->add_option("--horizon", o.horizon, "target time n (defaults to the model horizon)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Feynman-Kac particle fluctuation bench"};
    app.set_version_flag("--version", std::string(FKBENCH_VERSION));
    app.set_config("--config", "", "read options from a TOML/INI file");
    app.require_subcommand(1);
    Options o;

    auto* oracle = app.add_subcommand("oracle", "exact flow, semigroup tables and variance terms");
    add_source(oracle, o);

    auto* simulate = app.add_subcommand("simulate", "replicate particle runs to CSV");
    add_source(simulate, o);
    simulate->add_option("--N", o.n_particles, "particles")->check(CLI::PositiveNumber);
    simulate->add_option("--reps", o.reps, "replicates (default 100)")->check(CLI::PositiveNumber);
    simulate->add_flag("--check-doob", o.check_doob, "record per-replicate Doob residuals");
    simulate->add_flag("--per-step", o.per_step, "record per-step increments");

    auto* verify = app.add_subcommand("verify", "run a fluctuation experiment; exit 0 on PASS");
    verify->require_subcommand(1);
    auto* clt = verify->add_subcommand("clt", "Kolmogorov-distance rate fit");
    add_source(clt, o);
    clt->add_option("--N-grid", o.n_grid, "particle counts")->delimiter(',')->check(CLI::PositiveNumber);
    clt->add_option("--reps", o.reps, "replicates per N (default 2000)")->check(CLI::PositiveNumber);
    auto* conc = verify->add_subcommand("concentration", "exponential moment bounds");
    add_source(conc, o);
    conc->add_option("--N", o.n_particles, "particles")->check(CLI::PositiveNumber);
    conc->add_option("--eps-grid", o.eps_grid, "epsilon values")->delimiter(',');
    conc->add_option("--reps", o.reps, "replicates (default 2000)")->check(CLI::PositiveNumber);
    auto* moments = verify->add_subcommand("moments", "L_p moment bounds");
    add_source(moments, o);
    moments->add_option("--N", o.n_particles, "particles")->check(CLI::PositiveNumber);
    moments->add_option("--p-max", o.p_max, "largest moment order (1..8)");
    moments->add_option("--reps", o.reps, "replicates (default 2000)")->check(CLI::PositiveNumber);
    auto* stein = verify->add_subcommand("stein", "Stein perturbation and smoothing checks");
    add_source(stein, o);
    stein->add_option("--N", o.n_particles, "particles")->check(CLI::PositiveNumber);
    stein->add_option("--reps", o.reps, "replicates (default 10000)")->check(CLI::PositiveNumber);

    auto* zoo = app.add_subcommand("zoo", "built-in models");
    zoo->require_subcommand(1);
    zoo->add_subcommand("list", "names, default parameters and notes");
    auto* zoo_export = zoo->add_subcommand("export", "write model and function JSON files");
    std::string export_name;
    zoo_export->add_option("name", export_name, "zoo entry")->required();
    zoo_export->add_option("--param", o.params, "parameter override key=value (repeatable)");
    zoo_export->add_option("--out", o.out, "output directory")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try
    {
        if (oracle->parsed())
            return cmd_oracle(o);
        if (simulate->parsed())
            return cmd_simulate(o);
        if (clt->parsed())
            return cmd_verify_clt(o);
        if (conc->parsed())
            return cmd_verify_concentration(o);
        if (moments->parsed())
            return cmd_verify_moments(o);
        if (stein->parsed())
            return cmd_verify_stein(o);
        if (zoo->got_subcommand("list"))
            return cmd_zoo_list();
        if (zoo_export->parsed())
            return cmd_zoo_export(o, export_name);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "fkbench: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const InvalidArgument& e)
    {
        std::cerr << "fkbench: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const UnknownEntry& e)
    {
        std::cerr << "fkbench: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const json::exception& e)
    {
        std::cerr << "fkbench: malformed JSON input: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const std::exception& e)
    {
        // Experiment-level failures: degenerate inputs, violated hypotheses,
        // quadrature trouble. Reported as FAIL.
        std::cerr << "fkbench: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
