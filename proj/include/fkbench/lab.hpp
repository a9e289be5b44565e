#pragma once

#include "fkbench/model.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fkbench {

/// Slope window accepted for the log-log fit of Kolmogorov distances.
inline constexpr double kRateSlopeLow = -0.65;
inline constexpr double kRateSlopeHigh = -0.35;

/// ECDF noise scale 0.5 / sqrt(R) used for every Kolmogorov allowance.
double ecdf_noise(std::size_t replicates);

struct RateReport
{
    std::vector<int> n_grid;
    std::vector<double> distances;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_low = 0.0; // 2.5% bootstrap percentile
    double slope_high = 0.0;
    double sigma = 0.0;
    int n_reps = 0;
    int bootstrap_resamples = 0;
    std::uint64_t master_seed = 0;
    double noise_allowance = 0.0;
    bool pass = false;
};

/// Fits the rate from normalized samples (one vector per N). Values are
/// compared to a standard normal. Throws InsufficientReplicates when the
/// smallest distance is not above the ECDF noise scale.
RateReport rate_from_samples(const std::vector<int>& n_grid,
                             const std::vector<std::vector<double>>& normalized,
                             std::uint64_t master_seed, int bootstrap_resamples = 1000);

struct ExperimentOptions
{
    int threads = 1;
    int bootstrap_resamples = 1000;
};

/// Simulates W_{n,n}^N(f) / sigma_n(f) for each N and fits log D_N against
/// log N. PASS when the slope lies in [kRateSlopeLow, kRateSlopeHigh].
RateReport clt_rate_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                               const TestFunction& f, int n, const std::vector<int>& n_grid,
                               int n_reps, std::uint64_t master_seed,
                               const ExperimentOptions& options = {});

using CharacteristicFunction = std::function<std::complex<double>(double)>;

/// Right-hand side of the Berry-Esseen smoothing inequality:
/// (2/pi) int_0^a |cf1 - cf2| / x dx + 24 density_sup / (a pi).
double smoothing_bound(const CharacteristicFunction& cf1, const CharacteristicFunction& cf2,
                       double a, double density_sup);

/// Characteristic function of N(mean, sd^2).
CharacteristicFunction normal_cf(double mean, double sd);

/// Characteristic function of the empirical law of a sample.
CharacteristicFunction empirical_cf(std::vector<double> sample);

struct SteinCheck
{
    double lhs = 0.0;         // ||F_{X+Y} - Phi||
    double base = 0.0;        // ||F_X - Phi||
    double cross = 0.0;       // 4 E|XY|
    double shift = 0.0;       // 4 E|Y|
    double rhs = 0.0;
    double allowance = 0.0;   // 2 * 0.5 / sqrt(R)
    bool pass = false;
};

SteinCheck stein_check(const std::vector<double>& x, const std::vector<double>& y);

struct ConcentrationRow
{
    double eps = 0.0;
    double empirical = 0.0;
    double standard_error = 0.0;
    double bound = 0.0;
    double allowance = 0.0; // absolute: 3 standard errors
    bool pass = false;
};

struct ConcentrationReport
{
    std::string statistic; // "eta" or "delta_c"
    int n_particles = 0;
    int time = 0;
    int n_reps = 0;
    double constant = 0.0; // b(n) or a_3(n)
    std::uint64_t master_seed = 0;
    std::vector<ConcentrationRow> rows;
    bool pass = false;
};

/// (1 + eps b / sqrt(2)) exp((eps b)^2 / 2)
double eta_mgf_bound(double eps, double b);
/// (1 + eps a3) exp(eps^2 a3^2)
double delta_c_mgf_bound(double eps, double a3);

/// Geometric grid from 0.01 up to the cap 20 / (sqrt(N) osc).
std::vector<double> default_eps_grid(int n_particles, double osc, int points = 10);

/// Empirical E exp(eps sqrt(N) |eta_n^N(f) - eta_n(f)|) against the bound
/// built on b(n). Requires osc(f_n) <= 1.
ConcentrationReport concentration_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                             const TestFunction& f, int n, int n_particles,
                                             const std::vector<double>& eps_grid, int n_reps,
                                             std::uint64_t master_seed,
                                             const ExperimentOptions& options = {});

/// Empirical E exp(eps sqrt(N) |DeltaC_n^N(f) - DeltaC_n(f)|) against the
/// bound built on a_3(n) with Gamma from the epsilon kernels.
ConcentrationReport delta_c_concentration_experiment(const FeynmanKacModel& model,
                                                     const McKeanSpec& spec,
                                                     const TestFunction& f, int n,
                                                     int n_particles,
                                                     const std::vector<double>& eps_grid,
                                                     int n_reps, std::uint64_t master_seed,
                                                     const ExperimentOptions& options = {});

/// Exact E exp(eps sqrt(N) |K/N - q|) for K ~ Binomial(N, q).
double binomial_abs_mgf(int n_particles, double q, double eps);

/// Exact sqrt(N) E(|K/N - q|^p)^{1/p} for K ~ Binomial(N, q).
double binomial_scaled_moment(int n_particles, double q, int p);

struct MomentRow
{
    std::string kind; // "particle" or "iid"
    int p = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double allowance = 0.0;
    bool pass = false;
};

struct MomentReport
{
    int n_particles = 0;
    int time = 0;
    int n_reps = 0;
    double b = 0.0;
    std::uint64_t master_seed = 0;
    std::vector<MomentRow> rows;
    bool pass = false;
};

/// L_p moments of sqrt(N)(eta_n^N - eta_n)(f) against d(p)^{1/p} b(n), plus
/// the exact i.i.d. Bernoulli(1/2) rows against d(p)^{1/p} osc(h).
MomentReport lp_moment_experiment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                  const TestFunction& f, int n, int n_particles, int p_max,
                                  int n_reps, std::uint64_t master_seed,
                                  const ExperimentOptions& options = {});

} // namespace fkbench
