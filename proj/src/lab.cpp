#include "fkbench/lab.hpp"

#include "fkbench/constants.hpp"
#include "fkbench/errors.hpp"
#include "fkbench/flow.hpp"
#include "fkbench/particles.hpp"
#include "fkbench/rng.hpp"
#include "fkbench/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace fkbench {

namespace {

constexpr double kMgfExponentCap = 20.0;
constexpr double kStandardErrors = 3.0;
constexpr std::uint64_t kBootstrapStream = 0xb0075ull;

FlowAnalytics checked_analysis(const FeynmanKacModel& model, const McKeanSpec& spec,
                               const TestFunction& f, int n)
{
    validate_model(model);
    validate_spec(model, spec);
    validate_function(model, f, n);
    return analyze(model, spec, f, n);
}

void require_unit_oscillation(const TestFunction& f, int n)
{
    for (int p = 0; p <= n; ++p)
    {
        const double osc = oscillation(f.at(p));
        if (osc > 1.0 + kAlgebraicTol)
        {
            throw OscillationTooLarge("osc(f_" + std::to_string(p) + ") = " + std::to_string(osc)
                                      + "; rescale the function to oscillation <= 1");
        }
    }
}

void require_stable_grid(const std::vector<double>& eps_grid, int n_particles, double osc)
{
    const double root_n = std::sqrt(static_cast<double>(n_particles));
    for (double eps : eps_grid)
    {
        if (!(eps >= 0.0) || eps * root_n * osc > kMgfExponentCap * (1.0 + 1e-9))
        {
            throw InvalidArgument("eps = " + std::to_string(eps)
                                  + " outside [0, 20 / (sqrt(N) osc)]");
        }
    }
}

std::vector<ReplicateStats> run_replicates(const FeynmanKacModel& model, const McKeanSpec& spec,
                                           const TestFunction& f, const FlowAnalytics& flow,
                                           int n, int n_particles, int n_reps,
                                           std::uint64_t seed, const ExperimentOptions& options,
                                           bool normalized)
{
    RunConfig config;
    config.n_particles = n_particles;
    config.seed = seed;
    config.horizon = n;
    ReplicateOptions ro;
    ro.threads = options.threads;
    ro.normalized = normalized;
    return simulate_replicates(config, spec, model, f, flow, n_reps, ro);
}

ConcentrationReport mgf_report(const std::vector<double>& scaled, const std::vector<double>& eps_grid,
                               const std::function<double(double)>& bound)
{
    ConcentrationReport report;
    report.pass = true;
    std::vector<double> values(scaled.size());
    for (double eps : eps_grid)
    {
        for (std::size_t i = 0; i < scaled.size(); ++i)
            values[i] = std::exp(eps * scaled[i]);
        ConcentrationRow row;
        row.eps = eps;
        row.empirical = mean(values);
        row.standard_error = standard_error(values);
        row.bound = bound(eps);
        row.allowance = kStandardErrors * row.standard_error;
        row.pass = row.empirical <= row.bound + row.allowance;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

double binomial_log_pmf(int n, int k, double q)
{
    if (q <= 0.0)
        return k == 0 ? 0.0 : -INFINITY;
    if (q >= 1.0)
        return k == n ? 0.0 : -INFINITY;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)
           + k * std::log(q) + (n - k) * std::log1p(-q);
}

} // namespace

double ecdf_noise(std::size_t replicates)
{
    return 0.5 / std::sqrt(static_cast<double>(replicates));
}

RateReport rate_from_samples(const std::vector<int>& n_grid,
                             const std::vector<std::vector<double>>& normalized,
                             std::uint64_t master_seed, int bootstrap_resamples)
{
    if (n_grid.size() < 2 || n_grid.size() != normalized.size())
        throw InvalidArgument("rate fit needs samples for two or more particle counts");

    RateReport report;
    report.n_grid = n_grid;
    report.master_seed = master_seed;
    report.bootstrap_resamples = bootstrap_resamples;
    report.n_reps = static_cast<int>(normalized.front().size());

    std::vector<std::vector<double>> cdf(normalized.size());
    std::vector<double> log_n;
    std::vector<double> log_d;
    std::size_t smallest_r = normalized.front().size();
    for (std::size_t k = 0; k < normalized.size(); ++k)
    {
        if (normalized[k].empty())
            throw InsufficientReplicates("no replicates for N = " + std::to_string(n_grid[k]));
        smallest_r = std::min(smallest_r, normalized[k].size());
        cdf[k].reserve(normalized[k].size());
        for (double v : normalized[k])
            cdf[k].push_back(normal_cdf(v));
        std::vector<double> work = cdf[k];
        const double d = kolmogorov_distance_uniform(work);
        report.distances.push_back(d);
        log_n.push_back(std::log(static_cast<double>(n_grid[k])));
        log_d.push_back(std::log(d));
    }

    report.noise_allowance = ecdf_noise(smallest_r);
    const double smallest = *std::min_element(report.distances.begin(), report.distances.end());
    if (smallest <= report.noise_allowance)
    {
        throw InsufficientReplicates("smallest Kolmogorov distance " + std::to_string(smallest)
                                     + " is within ECDF noise " + std::to_string(report.noise_allowance)
                                     + "; increase the replicate count");
    }

    const LinearFit fit = least_squares(log_n, log_d);
    report.slope = fit.slope;
    report.intercept = fit.intercept;

    std::mt19937_64 engine(split_key(master_seed, kBootstrapStream));
    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(bootstrap_resamples));
    std::vector<double> boot_log_d(cdf.size());
    std::vector<double> work;
    for (int b = 0; b < bootstrap_resamples; ++b)
    {
        for (std::size_t k = 0; k < cdf.size(); ++k)
        {
            std::uniform_int_distribution<std::size_t> pick(0, cdf[k].size() - 1);
            work.resize(cdf[k].size());
            for (auto& v : work)
                v = cdf[k][pick(engine)];
            boot_log_d[k] = std::log(kolmogorov_distance_uniform(work));
        }
        slopes.push_back(least_squares(log_n, boot_log_d).slope);
    }
    if (!slopes.empty())
    {
        report.slope_low = quantile(slopes, 0.025);
        report.slope_high = quantile(slopes, 0.975);
    }
    report.pass = std::isfinite(report.slope) && report.slope >= kRateSlopeLow
                  && report.slope <= kRateSlopeHigh;
    return report;
}

RateReport clt_rate_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                               const TestFunction& f, int n, const std::vector<int>& n_grid,
                               int n_reps, std::uint64_t master_seed,
                               const ExperimentOptions& options)
{
    const FlowAnalytics flow = checked_analysis(model, spec, f, n);
    if (!(flow.sigma_sq > 0.0) || oscillation(f.at(n)) == 0.0)
        throw DegenerateFunction("sigma_n^2(f) = 0; the normalized fluctuation is undefined");
    if (n_reps < 2)
        throw InsufficientReplicates("need at least two replicates per particle count");

    std::vector<std::vector<double>> samples;
    for (std::size_t k = 0; k < n_grid.size(); ++k)
    {
        const auto stats = run_replicates(model, spec, f, flow, n, n_grid[k], n_reps,
                                          split_key(master_seed, k), options, true);
        std::vector<double> w;
        w.reserve(stats.size());
        for (const auto& s : stats)
            w.push_back(*s.w_normalized);
        samples.push_back(std::move(w));
    }
    RateReport report = rate_from_samples(n_grid, samples, master_seed, options.bootstrap_resamples);
    report.sigma = std::sqrt(flow.sigma_sq);
    return report;
}

double smoothing_bound(const CharacteristicFunction& cf1, const CharacteristicFunction& cf2,
                       double a, double density_sup)
{
    if (!(a > 0.0) || !(density_sup >= 0.0))
        throw InvalidArgument("smoothing bound needs a > 0 and a finite density bound");
    const double floor = 1e-9 * std::min(a, 1.0);
    auto integrand = [&](double x) {
        // Continuous extension at the origin: |cf1 - cf2| vanishes linearly.
        const double at = std::max(x, floor);
        return std::abs(cf1(at) - cf2(at)) / at;
    };
    double error = 0.0;
    double l1 = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, a, 25, 1e-8, &error, &l1);
    if (!std::isfinite(integral) || error > 1e-6 * std::max(l1, 1e-12))
    {
        throw QuadratureFailure("integral on [0, " + std::to_string(a)
                                + "] did not converge, error estimate " + std::to_string(error));
    }
    return 2.0 / std::numbers::pi * integral + 24.0 * density_sup / (a * std::numbers::pi);
}

CharacteristicFunction normal_cf(double mean_value, double sd)
{
    return [mean_value, sd](double t) {
        return std::exp(std::complex<double>(-0.5 * sd * sd * t * t, mean_value * t));
    };
}

CharacteristicFunction empirical_cf(std::vector<double> sample)
{
    return [sample = std::move(sample)](double t) {
        double re = 0.0;
        double im = 0.0;
        for (double x : sample)
        {
            re += std::cos(t * x);
            im += std::sin(t * x);
        }
        const double r = static_cast<double>(sample.size());
        return std::complex<double>(re / r, im / r);
    };
}

SteinCheck stein_check(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.empty())
        throw InvalidArgument("stein check needs paired, non-empty samples");
    std::vector<double> sum(x.size());
    std::vector<double> abs_xy(x.size());
    std::vector<double> abs_y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sum[i] = x[i] + y[i];
        abs_xy[i] = std::abs(x[i] * y[i]);
        abs_y[i] = std::abs(y[i]);
    }
    SteinCheck out;
    out.lhs = kolmogorov_distance(EcdfSample(sum), 1.0);
    out.base = kolmogorov_distance(EcdfSample(x), 1.0);
    out.cross = 4.0 * mean(abs_xy);
    out.shift = 4.0 * mean(abs_y);
    out.rhs = out.base + out.cross + out.shift;
    out.allowance = 2.0 * ecdf_noise(x.size());
    out.pass = out.lhs <= out.rhs + out.allowance;
    return out;
}

double eta_mgf_bound(double eps, double b)
{
    return (1.0 + eps * b / std::sqrt(2.0)) * std::exp(0.5 * (eps * b) * (eps * b));
}

double delta_c_mgf_bound(double eps, double a3)
{
    return (1.0 + eps * a3) * std::exp(eps * eps * a3 * a3);
}

std::vector<double> default_eps_grid(int n_particles, double osc, int points)
{
    const double cap = kMgfExponentCap / (std::sqrt(static_cast<double>(n_particles)) * std::max(osc, 1e-12));
    const double lo = std::min(0.01, cap);
    std::vector<double> grid{0.0};
    if (points < 2)
        return grid;
    const double ratio = std::pow(cap / lo, 1.0 / (points - 1));
    double eps = lo;
    for (int i = 0; i < points; ++i)
    {
        grid.push_back(std::min(eps, cap));
        eps *= ratio;
    }
    return grid;
}

ConcentrationReport concentration_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                             const TestFunction& f, int n, int n_particles,
                                             const std::vector<double>& eps_grid, int n_reps,
                                             std::uint64_t master_seed,
                                             const ExperimentOptions& options)
{
    const FlowAnalytics flow = checked_analysis(model, spec, f, n);
    require_unit_oscillation(f, n);
    require_stable_grid(eps_grid, n_particles, oscillation(f.at(n)));

    const auto stats = run_replicates(model, spec, f, flow, n, n_particles, n_reps, master_seed,
                                      options, false);
    const double root_n = std::sqrt(static_cast<double>(n_particles));
    std::vector<double> scaled;
    scaled.reserve(stats.size());
    for (const auto& s : stats)
        scaled.push_back(root_n * std::abs(s.eta_error));

    const double b = flow.b_const.at(static_cast<std::size_t>(n));
    ConcentrationReport report =
        mgf_report(scaled, eps_grid, [b](double eps) { return eta_mgf_bound(eps, b); });
    report.statistic = "eta";
    report.n_particles = n_particles;
    report.time = n;
    report.n_reps = n_reps;
    report.constant = b;
    report.master_seed = master_seed;
    return report;
}

ConcentrationReport delta_c_concentration_experiment(const FeynmanKacModel& model,
                                                     const McKeanSpec& spec,
                                                     const TestFunction& f, int n,
                                                     int n_particles,
                                                     const std::vector<double>& eps_grid,
                                                     int n_reps, std::uint64_t master_seed,
                                                     const ExperimentOptions& options)
{
    const FlowAnalytics flow = checked_analysis(model, spec, f, n);
    require_unit_oscillation(f, n);
    require_stable_grid(eps_grid, n_particles, oscillation(f.at(n)));

    std::vector<Vector> family(f.values.begin(), f.values.begin() + n + 1);
    const VarianceTerms limit = increasing_process_limit(model, spec, flow, family);
    const double target = limit.delta_c.back();

    const auto stats = run_replicates(model, spec, f, flow, n, n_particles, n_reps, master_seed,
                                      options, false);
    const double root_n = std::sqrt(static_cast<double>(n_particles));
    std::vector<double> scaled;
    scaled.reserve(stats.size());
    for (const auto& s : stats)
        scaled.push_back(root_n * std::abs(s.last_delta_c - target));

    const double a3 = a3_bound(flow, n, mckean_gamma(spec).combined);
    ConcentrationReport report =
        mgf_report(scaled, eps_grid, [a3](double eps) { return delta_c_mgf_bound(eps, a3); });
    report.statistic = "delta_c";
    report.n_particles = n_particles;
    report.time = n;
    report.n_reps = n_reps;
    report.constant = a3;
    report.master_seed = master_seed;
    return report;
}

double binomial_abs_mgf(int n_particles, double q, double eps)
{
    const double root_n = std::sqrt(static_cast<double>(n_particles));
    double total = 0.0;
    for (int k = 0; k <= n_particles; ++k)
    {
        const double dev = std::abs(static_cast<double>(k) / n_particles - q);
        total += std::exp(binomial_log_pmf(n_particles, k, q) + eps * root_n * dev);
    }
    return total;
}

double binomial_scaled_moment(int n_particles, double q, int p)
{
    double total = 0.0;
    for (int k = 0; k <= n_particles; ++k)
    {
        const double dev = std::abs(static_cast<double>(k) / n_particles - q);
        if (dev == 0.0)
            continue;
        total += std::exp(binomial_log_pmf(n_particles, k, q) + p * std::log(dev));
    }
    return std::sqrt(static_cast<double>(n_particles)) * std::pow(total, 1.0 / p);
}

MomentReport lp_moment_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                  const TestFunction& f, int n, int n_particles, int p_max,
                                  int n_reps, std::uint64_t master_seed,
                                  const ExperimentOptions& options)
{
    if (p_max < 1 || p_max > 8)
        throw InvalidArgument("p_max must lie in [1, 8]");
    const FlowAnalytics flow = checked_analysis(model, spec, f, n);
    require_unit_oscillation(f, n);

    const auto stats = run_replicates(model, spec, f, flow, n, n_particles, n_reps, master_seed,
                                      options, false);
    const double root_n = std::sqrt(static_cast<double>(n_particles));
    std::vector<double> scaled;
    scaled.reserve(stats.size());
    for (const auto& s : stats)
        scaled.push_back(root_n * std::abs(s.eta_error));

    MomentReport report;
    report.n_particles = n_particles;
    report.time = n;
    report.n_reps = n_reps;
    report.b = flow.b_const.at(static_cast<std::size_t>(n));
    report.master_seed = master_seed;
    report.pass = true;

    auto lp_norm = [](const std::vector<double>& v, int p) {
        double total = 0.0;
        for (double x : v)
            total += std::pow(x, p);
        return std::pow(total / static_cast<double>(v.size()), 1.0 / p);
    };

    constexpr int kResamples = 200;
    std::mt19937_64 engine(split_key(master_seed, kBootstrapStream));
    std::uniform_int_distribution<std::size_t> pick(0, scaled.size() - 1);
    std::vector<std::vector<double>> boot(kResamples, std::vector<double>(scaled.size()));
    for (auto& sample : boot)
    {
        for (auto& v : sample)
            v = scaled[pick(engine)];
    }

    for (int p = 1; p <= p_max; ++p)
    {
        MomentRow row;
        row.kind = "particle";
        row.p = p;
        row.lhs = lp_norm(scaled, p);
        row.rhs = std::pow(burkholder_d(p), 1.0 / p) * report.b;
        std::vector<double> boot_norms;
        boot_norms.reserve(boot.size());
        for (const auto& sample : boot)
            boot_norms.push_back(lp_norm(sample, p));
        row.allowance = kStandardErrors * standard_error(boot_norms)
                        * std::sqrt(static_cast<double>(boot_norms.size()));
        row.pass = row.lhs <= row.rhs + row.allowance;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }

    // Independent Bernoulli(1/2) variables with h = 1{X = 1} - 1/2: osc(h) = 1.
    for (int p = 1; p <= p_max; ++p)
    {
        MomentRow row;
        row.kind = "iid";
        row.p = p;
        row.lhs = binomial_scaled_moment(n_particles, 0.5, p);
        row.rhs = std::pow(burkholder_d(p), 1.0 / p);
        row.pass = row.lhs <= row.rhs;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

} // namespace fkbench
