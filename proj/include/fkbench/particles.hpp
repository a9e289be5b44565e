#pragma once

#include "fkbench/flow.hpp"
#include "fkbench/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fkbench {

/// Which optional per-step series a run keeps beyond the terminal summary.
struct RecordFields
{
    bool per_step = false;
    bool doob_residuals = false;
};

struct RunConfig
{
    int n_particles = 1;
    // Key of this run's random streams. simulate_replicates() treats it as the
    // master seed and derives one key per replicate.
    std::uint64_t seed = 0;
    int horizon = 0;
    RecordFields record;
};

/// Particle positions at one time; states[i] indexes E_time.
struct ParticleCloud
{
    int time = 0;
    std::vector<int> states;

    std::vector<std::int64_t> counts(int dim) const;
    /// Occupation measure m_N(xi) as a probability vector.
    Vector empirical(int dim) const;
};

/// Everything a single run records: occupation counts per time, and the
/// sampling-error increments and exact increasing-process increments of the
/// test-function family f_0..f_n.
struct RunTrace
{
    int n_particles = 0;
    std::vector<std::vector<std::int64_t>> counts;
    std::vector<double> delta_m;
    std::vector<double> delta_c;

    int horizon() const { return static_cast<int>(counts.size()) - 1; }
    Vector empirical(int n) const;
    double increasing_process() const;
};

/// Draws N i.i.d. particles from eta0 using stream (seed, step 0).
ParticleCloud init_particles(const RunConfig& config, const FeynmanKacModel& model);

/// Moves every particle through the McKean kernel built on the current
/// occupation measure. Particle i consumes draw i of stream (seed, time + 1).
ParticleCloud step_particles(const ParticleCloud& cloud, const McKeanSpec& spec,
                             const FeynmanKacModel& model, std::uint64_t seed);

/// eta_n^N(f_n) - eta_{n-1}^N K_{n,eta_{n-1}^N}(f_n); with no previous cloud
/// (n = 0) the subtracted term is eta0(f_0).
double martingale_increment(const FeynmanKacModel& model, const McKeanSpec& spec,
                            const ParticleCloud* previous, const ParticleCloud& cloud,
                            const Vector& f);

/// Exact conditional variance of the next sampling error given the cloud at
/// time n - 1; Var_{eta0}(f_0) when there is no previous cloud.
double increasing_process_increment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                    const ParticleCloud* previous, const Vector& f, int n);

/// One seeded run up to config.horizon recording the f family bookkeeping.
RunTrace simulate_run(const RunConfig& config, const McKeanSpec& spec,
                      const FeynmanKacModel& model, const TestFunction& f);

/// Decompositions of eta_p^N(f_{p,n}) and W_{p,n}^N for p = 0..n, all
/// evaluated on the realized occupation measures of one run.
struct DoobSeries
{
    std::vector<double> eta_f; // eta_p^N(f_{p,n})
    std::vector<double> a;     // predictable part A_{p,n}^N
    std::vector<double> m;     // martingale part M_{p,n}^N
    std::vector<double> b;     // predictable part B_{p,n}^N of W
    std::vector<double> l;     // martingale part L_{p,n}^N of W
    std::vector<double> w;     // W_{p,n}^N

    /// max_p |eta_p^N(f_{p,n}) - A - M|
    double residual_am() const;
    /// max_p |W - B - L|
    double residual_wbl() const;
};

/// Requires flow.fpn attached for target n <= trace.horizon().
DoobSeries doob_terms(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const FlowAnalytics& flow, const RunTrace& trace);

struct ReplicateStats
{
    std::uint64_t replicate = 0;
    int n_particles = 0;
    int time = 0;
    double w = 0.0;          // W_{n,n}^N(f)
    double l_terminal = 0.0; // L_{n,n}^N(f)
    double b_terminal = 0.0; // B_{n,n}^N(f)
    double c_n = 0.0;        // C_n^N(f) for the f_0..f_n family
    double last_delta_c = 0.0;
    double eta_error = 0.0;  // eta_n^N(f_n) - eta_n(f_n)
    double max_deviation = 0.0;
    std::optional<double> w_normalized;
    std::optional<double> residual_am;
    std::optional<double> residual_wbl;
    std::vector<double> delta_m;
    std::vector<double> delta_c;
};

struct ReplicateOptions
{
    int threads = 1;
    bool normalized = false;
};

/// Runs n_reps independent replicates, replicate r keyed by
/// replicate_key(config.seed, r). Results are ordered by replicate index and
/// do not depend on the thread count. Throws DegenerateFunction if a
/// normalized statistic is requested while sigma_n^2(f) vanishes.
std::vector<ReplicateStats> simulate_replicates(const RunConfig& config, const McKeanSpec& spec,
                                                const FeynmanKacModel& model,
                                                const TestFunction& f, const FlowAnalytics& flow,
                                                int n_reps, const ReplicateOptions& options = {});

/// Thread count from FKBENCH_THREADS, capped by the hardware; at least 1.
int default_thread_count();

} // namespace fkbench
