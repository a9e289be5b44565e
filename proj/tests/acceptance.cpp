// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "fkbench/constants.hpp"
#include "fkbench/flow.hpp"
#include "fkbench/lab.hpp"
#include "fkbench/particles.hpp"
#include "fkbench/stats.hpp"
#include "fkbench/zoo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fkbench;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...)
{
    char buffer[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buffer, sizeof buffer, format, args);
    va_end(args);
    return buffer;
}

Vector random_law(std::mt19937_64& rng, int d)
{
    std::exponential_distribution<double> draw(1.0);
    Vector mu(d);
    for (int x = 0; x < d; ++x)
        mu[x] = draw(rng);
    return mu / mu.sum();
}

Vector random_function(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector f(d);
    for (int x = 0; x < d; ++x)
        f[x] = unit(rng);
    return f;
}

// -----------------------------------------------------------------------------

Outcome exact_algebra()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double compat = 0.0;
    double consistency = 0.0;
    double dual = 0.0;
    double qbar_one = 0.0;

    for (const auto& item : zoo_list())
    {
        const ZooEntry entry = build(item.name);
        const FeynmanKacModel& model = entry.model;
        const int h = model.horizon;

        for (int trial = 0; trial < 100 && h > 0; ++trial)
        {
            const int n = trial % h;
            const Vector mu = random_law(rng, model.dim(n));
            // One uniform scale per trial, mapped onto each step's admissible range.
            const double scale = unit(rng);
            McKeanSpec spec;
            for (int q = 0; q < h; ++q)
                spec.epsilons.push_back(scale / model.potential(q).maxCoeff());
            compat = std::max(compat, compatibility_residual(model, spec, mu, n));

            const Vector phi = random_function(rng, model.dim(n + 1));
            dual = std::max(dual, std::abs(conditional_variance(model, spec, mu, n + 1, phi)
                                           - conditional_variance_dual(model, spec, mu, n + 1, phi)));
        }

        FlowAnalytics flow = exact_flow(model);
        compute_semigroups(model, flow);
        for (int n = 0; n <= h; ++n)
        {
            for (int p = 0; p <= n; ++p)
            {
                const Vector pushed = (flow.eta(p).transpose() * flow.semigroup(p, n)).transpose();
                consistency = std::max(consistency, (pushed - flow.eta(n)).cwiseAbs().maxCoeff());
            }
        }
        for (int q = 1; q <= h; ++q)
        {
            const Vector ones = normalized_step(model, flow, q).rowwise().sum();
            qbar_one = std::max(qbar_one, std::abs(flow.eta(q - 1).dot(ones) - 1.0));
        }
        attach_function(model, flow, entry.function, h);
        const VarianceTerms terms = limiting_variance(model, entry.spec, flow);
        dual = std::max(dual, terms.dual_form_gap);
    }

    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = compat <= 1e-12 && consistency <= 1e-10 && dual <= 1e-12 && qbar_one <= 1e-12
               && elapsed < 10.0;
    out.detail = fmt("compat %.2e, eta_p Qbar_pn - eta_n %.2e, dual-form %.2e, eta(Qbar 1) - 1 %.2e, %.2f s",
                     compat, consistency, dual, qbar_one, elapsed);
    return out;
}

Outcome doob_identities()
{
    const auto start = Clock::now();
    const ZooEntry hmm = build("binary_hmm");
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, 5);
    RunConfig config;
    config.n_particles = 500;
    config.seed = 31337;
    config.horizon = 5;
    config.record.doob_residuals = true;
    const auto stats = simulate_replicates(config, hmm.spec, hmm.model, hmm.function, flow, 200,
                                           {default_thread_count(), false});
    double am = 0.0;
    double wbl = 0.0;
    for (const auto& s : stats)
    {
        am = std::max(am, *s.residual_am);
        wbl = std::max(wbl, *s.residual_wbl);
    }
    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = am <= 1e-10 && wbl <= 1e-10 && elapsed < 30.0;
    out.detail = fmt("200 replicates, max |eta^N f - A - M| %.2e, max |W - B - L| %.2e, %.2f s", am,
                     wbl, elapsed);
    return out;
}

Outcome path_space()
{
    const auto start = Clock::now();
    double worst = 0.0;
    for (int horizon = 0; horizon <= 6; ++horizon)
    {
        const ZooEntry path = build("path_genealogy", {{"horizon", horizon}});
        const ZooEntry base = build("binary_hmm", {{"horizon", horizon}});
        const FlowAnalytics pf = exact_flow(path.model);
        const FlowAnalytics bf = exact_flow(base.model);
        for (int n = 0; n <= horizon; ++n)
        {
            const Vector& eta = pf.eta(n);
            const Eigen::Index last_scale = eta.size() / 2;
            Vector marginal = Vector::Zero(2);
            for (Eigen::Index code = 0; code < eta.size(); ++code)
                marginal[code / last_scale] += eta[code];
            worst = std::max(worst, (marginal - bf.eta(n)).cwiseAbs().maxCoeff());
        }
    }
    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = worst <= 1e-12 && elapsed < 5.0;
    out.detail = fmt("horizons 0..6, max marginal gap %.2e, %.2f s", worst, elapsed);
    return out;
}

std::string distances(const RateReport& r)
{
    std::ostringstream s;
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
        s << (i ? " " : "") << "D_" << r.n_grid[i] << "=" << fmt("%.4f", r.distances[i]);
    return s.str();
}

Outcome clt_rate(const std::string& name, bool check_ratio)
{
    const ZooEntry entry = build(name);
    const int n = entry.model.horizon;
    ExperimentOptions options;
    options.threads = default_thread_count();
    const RateReport r = clt_rate_experiment(entry.model, entry.spec, entry.function, n,
                                             {100, 400, 1600, 6400}, 2000, 271828, options);
    const double ratio = r.distances.front() / r.distances.back();
    Outcome out;
    out.pass = r.pass && (!check_ratio || ratio > 4.0);
    out.detail = fmt("slope %.3f (bootstrap 95%% [%.3f, %.3f]), D_100/D_6400 %.2f, ", r.slope,
                     r.slope_low, r.slope_high, ratio)
                 + distances(r);
    return out;
}

Outcome increasing_process()
{
    const ZooEntry hmm = build("binary_hmm");
    const int n = hmm.model.horizon;
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, n);
    const VarianceTerms limit = increasing_process_limit(hmm.model, hmm.spec, flow, hmm.function.values);
    double target = 0.0;
    for (double v : limit.delta_c)
        target += v;

    std::vector<double> medians;
    for (int n_particles : {100, 10000})
    {
        RunConfig config;
        config.n_particles = n_particles;
        config.seed = 4242;
        config.horizon = n;
        const auto stats = simulate_replicates(config, hmm.spec, hmm.model, hmm.function, flow, 200,
                                               {default_thread_count(), false});
        std::vector<double> gaps;
        for (const auto& s : stats)
            gaps.push_back(std::abs(s.c_n - target));
        medians.push_back(quantile(gaps, 0.5));
    }
    const double factor = medians[0] / medians[1];
    Outcome out;
    out.pass = factor >= 5.0;
    out.detail = fmt("C_n(f) %.5f, median gap N=100 %.3e, N=10000 %.3e, factor %.2f", target,
                     medians[0], medians[1], factor);
    return out;
}

std::string worst_row(const ConcentrationReport& r)
{
    const auto worst = std::max_element(r.rows.begin(), r.rows.end(),
                                        [](const ConcentrationRow& a, const ConcentrationRow& b) {
                                            return a.empirical / a.bound < b.empirical / b.bound;
                                        });
    const auto& last = r.rows.back();
    return fmt("N=%d const %.3g, max empirical/bound %.3f, at eps %.3g: %.4g <= %.4g", r.n_particles,
               r.constant, worst->empirical / worst->bound, last.eps, last.empirical, last.bound);
}

Outcome concentration_eta()
{
    Outcome out;
    out.pass = true;
    ExperimentOptions options;
    options.threads = default_thread_count();
    for (const char* name : {"ring_walk", "binary_hmm"})
    {
        const ZooEntry entry = build(name);
        const int n = entry.model.horizon;
        for (int n_particles : {100, 1000})
        {
            const auto grid = default_eps_grid(n_particles, oscillation(entry.function.at(n)));
            const ConcentrationReport r = concentration_experiment(
                entry.model, entry.spec, entry.function, n, n_particles, grid, 2000, 777, options);
            out.pass = out.pass && r.pass;
            out.detail += std::string(name) + " " + worst_row(r) + "; ";
        }
    }
    // Horizon zero: eta^N(f) is a binomial average, b(0) = 2.
    bool exact = true;
    for (int n_particles : {100, 1000})
    {
        for (double eps : default_eps_grid(n_particles, 1.0))
        {
            for (double q : {0.01, 0.3, 0.5})
                exact = exact && binomial_abs_mgf(n_particles, q, eps) <= eta_mgf_bound(eps, 2.0) * (1.0 + 1e-12);
        }
    }
    out.pass = out.pass && exact;
    out.detail += std::string("exact binomial ") + (exact ? "ok" : "violated");
    return out;
}

Outcome concentration_delta_c()
{
    Outcome out;
    out.pass = true;
    ExperimentOptions options;
    options.threads = default_thread_count();
    for (const char* name : {"ring_walk", "binary_hmm"})
    {
        const ZooEntry entry = build(name);
        const int n = entry.model.horizon;
        for (int n_particles : {100, 1000})
        {
            const auto grid = default_eps_grid(n_particles, oscillation(entry.function.at(n)));
            const ConcentrationReport r = delta_c_concentration_experiment(
                entry.model, entry.spec, entry.function, n, n_particles, grid, 2000, 888, options);
            out.pass = out.pass && r.pass;
            out.detail += std::string(name) + " " + worst_row(r) + "; ";
        }
    }
    out.detail.resize(out.detail.size() - 2);
    return out;
}

Outcome moments()
{
    Outcome out;
    out.pass = burkholder_d(2) == 1.0 && burkholder_d(4) == 3.0;
    out.detail = fmt("d(2)=%g d(4)=%g; ", burkholder_d(2), burkholder_d(4));
    ExperimentOptions options;
    options.threads = default_thread_count();
    for (const char* name : {"ring_walk", "binary_hmm"})
    {
        const ZooEntry entry = build(name);
        const int n = entry.model.horizon;
        const MomentReport r = lp_moment_experiment(entry.model, entry.spec, entry.function, n, 1000,
                                                    6, 2000, 999, options);
        out.pass = out.pass && r.pass;
        double worst = INFINITY;
        int worst_p = 0;
        for (const auto& row : r.rows)
        {
            if (row.kind == "particle" && row.rhs + row.allowance - row.lhs < worst)
            {
                worst = row.rhs + row.allowance - row.lhs;
                worst_p = row.p;
            }
        }
        const auto& row = *std::find_if(r.rows.begin(), r.rows.end(), [&](const MomentRow& m) {
            return m.kind == "particle" && m.p == worst_p;
        });
        out.detail += fmt("%s b=%.3g tightest p=%d: %.4g <= %.4g + %.2g; ", name, r.b, worst_p, row.lhs,
                          row.rhs, row.allowance);
    }
    out.detail.resize(out.detail.size() - 2);
    return out;
}

Outcome smoothing_and_stein()
{
    const double density = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    bool shift_ok = true;
    double min_slack = INFINITY;
    for (double shift : {0.01, 0.05, 0.2, 0.5, 1.0, 2.0})
    {
        double lhs = 0.0;
        for (int i = -2000; i <= 2000; ++i)
        {
            const double x = i * 0.005;
            lhs = std::max(lhs, std::abs(normal_cdf(x) - normal_cdf(x - shift)));
        }
        for (double a : {1.0, 5.0, 20.0, 100.0})
        {
            const double rhs = smoothing_bound(normal_cf(0.0, 1.0), normal_cf(shift, 1.0), a, density);
            shift_ok = shift_ok && rhs >= lhs;
            min_slack = std::min(min_slack, rhs - lhs);
        }
    }

    const ZooEntry hmm = build("binary_hmm");
    const int n = hmm.model.horizon;
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, n);
    RunConfig config;
    config.n_particles = 1000;
    config.seed = 161803;
    config.horizon = n;
    const auto stats = simulate_replicates(config, hmm.spec, hmm.model, hmm.function, flow, 10000,
                                           {default_thread_count(), false});
    const double sigma = std::sqrt(flow.sigma_sq);
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;
    for (const auto& s : stats)
    {
        x.push_back(s.l_terminal / sigma);
        y.push_back(s.b_terminal / sigma);
        w.push_back(s.w / sigma);
    }
    const SteinCheck stein = stein_check(x, y);

    // Smoothing inequality on the realized law of W / sigma against N(0, 1).
    const double realized_lhs = kolmogorov_distance(EcdfSample(w), 1.0);
    const double realized_rhs = smoothing_bound(empirical_cf(w), normal_cf(0.0, 1.0), 10.0, density);

    Outcome out;
    out.pass = shift_ok && stein.pass && realized_rhs >= realized_lhs;
    out.detail = fmt("normal shifts min slack %.3g; realized W: %.4f <= %.4f; Stein %.4f <= %.4f + %.4f "
                     "+ %.4f + %.4f (allowance)",
                     min_slack, realized_lhs, realized_rhs, stein.lhs, stein.base, stein.cross,
                     stein.shift, stein.allowance);
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    // Optional: --only NAME runs a single criterion.
    const std::string only = argc == 3 && std::string(argv[1]) == "--only" ? argv[2] : "";
    struct Criterion
    {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"exact-algebra", exact_algebra},
        {"doob-identities", doob_identities},
        {"path-space-consistency", path_space},
        {"clt-rate-binary_hmm", [] { return clt_rate("binary_hmm", true); }},
        {"clt-rate-iid_reduction", [] { return clt_rate("iid_reduction", false); }},
        {"increasing-process", increasing_process},
        {"concentration-eta", concentration_eta},
        {"concentration-delta-c", concentration_delta_c},
        {"lp-moments", moments},
        {"smoothing-and-stein", smoothing_and_stein},
    };

    int failures = 0;
    int ran = 0;
    for (const auto& c : criteria)
    {
        if (!only.empty() && only != c.name)
            continue;
        ++ran;
        const auto start = Clock::now();
        Outcome outcome;
        try
        {
            outcome = c.run();
        }
        catch (const std::exception& e)
        {
            outcome.pass = false;
            outcome.detail = std::string("error: ") + e.what();
        }
        failures += outcome.pass ? 0 : 1;
        std::printf("%s  %-24s %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", c.name,
                    outcome.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    if (ran == 0)
    {
        std::fprintf(stderr, "no criterion named '%s'\n", only.c_str());
        return 2;
    }
    std::printf("%d of %d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
