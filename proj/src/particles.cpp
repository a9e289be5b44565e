#include "fkbench/particles.hpp"

#include "fkbench/errors.hpp"
#include "fkbench/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace fkbench {

namespace {

Vector to_probability(const std::vector<std::int64_t>& counts, int n_particles)
{
    Vector out(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]) / n_particles;
    return out;
}

int sample_row(const std::vector<double>& cumulative, double u)
{
    const double target = u * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const auto idx = static_cast<int>(it - cumulative.begin());
    return std::min(idx, static_cast<int>(cumulative.size()) - 1);
}

void check_config(const RunConfig& config, const FeynmanKacModel& model)
{
    if (config.n_particles < 1)
        throw InvalidArgument("need at least one particle");
    if (config.horizon < 0 || config.horizon > model.horizon)
    {
        throw InvalidArgument("run horizon " + std::to_string(config.horizon)
                              + " outside model horizon " + std::to_string(model.horizon));
    }
}

} // namespace

std::vector<std::int64_t> ParticleCloud::counts(int dim) const
{
    std::vector<std::int64_t> out(static_cast<std::size_t>(dim), 0);
    for (int s : states)
        ++out[static_cast<std::size_t>(s)];
    return out;
}

Vector ParticleCloud::empirical(int dim) const
{
    return to_probability(counts(dim), static_cast<int>(states.size()));
}

Vector RunTrace::empirical(int n) const
{
    return to_probability(counts.at(static_cast<std::size_t>(n)), n_particles);
}

double RunTrace::increasing_process() const
{
    double total = 0.0;
    for (double v : delta_c)
        total += v;
    return total;
}

ParticleCloud init_particles(const RunConfig& config, const FeynmanKacModel& model)
{
    check_config(config, model);
    std::vector<double> cumulative(static_cast<std::size_t>(model.dim(0)));
    double acc = 0.0;
    for (int x = 0; x < model.dim(0); ++x)
    {
        acc += model.eta0[x];
        cumulative[static_cast<std::size_t>(x)] = acc;
    }
    CounterStream stream(stream_key(config.seed, 0));
    ParticleCloud cloud;
    cloud.time = 0;
    cloud.states.resize(static_cast<std::size_t>(config.n_particles));
    for (auto& s : cloud.states)
        s = sample_row(cumulative, stream.uniform());
    return cloud;
}

ParticleCloud step_particles(const ParticleCloud& cloud, const McKeanSpec& spec,
                             const FeynmanKacModel& model, std::uint64_t seed)
{
    const int n = cloud.time;
    if (n >= model.horizon)
        throw InvalidArgument("cloud already at the model horizon");
    const Matrix k = mckean_kernel(model, spec, cloud.empirical(model.dim(n)), n);

    std::vector<std::vector<double>> cumulative(static_cast<std::size_t>(k.rows()));
    for (int s : cloud.states)
    {
        auto& row = cumulative[static_cast<std::size_t>(s)];
        if (!row.empty())
            continue;
        row.resize(static_cast<std::size_t>(k.cols()));
        double acc = 0.0;
        for (Eigen::Index y = 0; y < k.cols(); ++y)
        {
            acc += k(s, y);
            row[static_cast<std::size_t>(y)] = acc;
        }
    }

    CounterStream stream(stream_key(seed, n + 1));
    ParticleCloud next;
    next.time = n + 1;
    next.states.resize(cloud.states.size());
    for (std::size_t i = 0; i < cloud.states.size(); ++i)
        next.states[i] = sample_row(cumulative[static_cast<std::size_t>(cloud.states[i])], stream.uniform());
    return next;
}

double martingale_increment(const FeynmanKacModel& model, const McKeanSpec& spec,
                            const ParticleCloud* previous, const ParticleCloud& cloud,
                            const Vector& f)
{
    const double current = cloud.empirical(model.dim(cloud.time)).dot(f);
    if (previous == nullptr)
        return current - model.eta0.dot(f);
    const Vector mu = previous->empirical(model.dim(previous->time));
    const Matrix k = mckean_kernel(model, spec, mu, previous->time);
    return current - mu.dot(k * f);
}

double increasing_process_increment(const FeynmanKacModel& model, const McKeanSpec& spec,
                                    const ParticleCloud* previous, const Vector& f, int n)
{
    if (previous == nullptr)
        return conditional_variance(model, spec, model.eta0, 0, f);
    return conditional_variance(model, spec, previous->empirical(model.dim(n - 1)), n, f);
}

RunTrace simulate_run(const RunConfig& config, const McKeanSpec& spec,
                      const FeynmanKacModel& model, const TestFunction& f)
{
    check_config(config, model);
    validate_function(model, f, config.horizon);

    RunTrace trace;
    trace.n_particles = config.n_particles;
    ParticleCloud cloud = init_particles(config, model);
    trace.counts.push_back(cloud.counts(model.dim(0)));
    trace.delta_m.push_back(martingale_increment(model, spec, nullptr, cloud, f.at(0)));
    trace.delta_c.push_back(increasing_process_increment(model, spec, nullptr, f.at(0), 0));

    for (int n = 1; n <= config.horizon; ++n)
    {
        ParticleCloud next = step_particles(cloud, spec, model, config.seed);
        trace.counts.push_back(next.counts(model.dim(n)));
        trace.delta_m.push_back(martingale_increment(model, spec, &cloud, next, f.at(n)));
        trace.delta_c.push_back(increasing_process_increment(model, spec, &cloud, f.at(n), n));
        cloud = std::move(next);
    }
    return trace;
}

double DoobSeries::residual_am() const
{
    double worst = 0.0;
    for (std::size_t p = 0; p < eta_f.size(); ++p)
        worst = std::max(worst, std::abs(eta_f[p] - a[p] - m[p]));
    return worst;
}

double DoobSeries::residual_wbl() const
{
    double worst = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p)
        worst = std::max(worst, std::abs(w[p] - b[p] - l[p]));
    return worst;
}

DoobSeries doob_terms(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const FlowAnalytics& flow, const RunTrace& trace)
{
    const int n = flow.target;
    if (n < 0 || n > trace.horizon())
        throw InvalidArgument("flow target is not covered by the trace");
    const double root_n = std::sqrt(static_cast<double>(trace.n_particles));

    DoobSeries out;
    double a_acc = 0.0;
    double m_acc = 0.0;
    double b_acc = 0.0;
    double l_acc = 0.0;
    for (int p = 0; p <= n; ++p)
    {
        const Vector& fp = flow.f_pn(p);
        const Vector eta_np = trace.empirical(p);
        const double eta_f = eta_np.dot(fp);

        if (p == 0)
        {
            const double baseline = model.eta0.dot(fp);
            m_acc += eta_f - baseline;
            l_acc += root_n * (eta_f - baseline);
        }
        else
        {
            const Vector prev = trace.empirical(p - 1);
            const Vector phi_particles = step_phi(model, prev, p - 1);
            const double phi_f = phi_particles.dot(fp);

            // Predictable term through the normalized one-step semigroup.
            const double qbar_one = prev.dot(flow.semigroup(p - 1, p).rowwise().sum());
            a_acc += (1.0 - qbar_one) * phi_f;
            m_acc += eta_f - phi_f;

            // Predictable term of W through the potential ratio.
            const Vector& g = model.potential(p - 1);
            const double ratio = prev.dot(g) / flow.eta(p - 1).dot(g);
            const double phi_exact_f = step_phi(model, flow.eta(p - 1), p - 1).dot(fp);
            b_acc += root_n * (1.0 - ratio) * (phi_f - phi_exact_f);

            const Matrix k = mckean_kernel_from_phi(model, spec, phi_particles, p - 1);
            l_acc += root_n * (eta_f - prev.dot(k * fp));
        }

        out.eta_f.push_back(eta_f);
        out.a.push_back(a_acc);
        out.m.push_back(m_acc);
        out.b.push_back(b_acc);
        out.l.push_back(l_acc);
        out.w.push_back(root_n * (eta_f - flow.eta(p).dot(fp)));
    }
    return out;
}

std::vector<ReplicateStats> simulate_replicates(const RunConfig& config, const McKeanSpec& spec,
                                                const FeynmanKacModel& model,
                                                const TestFunction& f, const FlowAnalytics& flow,
                                                int n_reps, const ReplicateOptions& options)
{
    if (n_reps < 1)
        throw InvalidArgument("need at least one replicate");
    check_config(config, model);
    validate_spec(model, spec);
    validate_function(model, f, config.horizon);
    if (flow.target != config.horizon)
        throw InvalidArgument("flow analytics must target the run horizon");
    double sigma = 0.0;
    if (options.normalized)
    {
        if (!(flow.sigma_sq > 0.0))
            throw DegenerateFunction("sigma_n^2(f) = 0; normalized fluctuations are undefined");
        sigma = std::sqrt(flow.sigma_sq);
    }

    const int n = config.horizon;
    const Vector& fn = f.at(n);
    const double eta_fn = flow.eta(n).dot(fn);
    std::vector<ReplicateStats> results(static_cast<std::size_t>(n_reps));

    auto run_one = [&](int rep) {
        RunConfig local = config;
        local.seed = replicate_key(config.seed, static_cast<std::uint64_t>(rep));
        const RunTrace trace = simulate_run(local, spec, model, f);
        const DoobSeries doob = doob_terms(model, spec, flow, trace);

        ReplicateStats& s = results[static_cast<std::size_t>(rep)];
        s.replicate = static_cast<std::uint64_t>(rep);
        s.n_particles = config.n_particles;
        s.time = n;
        s.w = doob.w.back();
        s.l_terminal = doob.l.back();
        s.b_terminal = doob.b.back();
        s.c_n = trace.increasing_process();
        s.last_delta_c = trace.delta_c.back();
        s.eta_error = trace.empirical(n).dot(fn) - eta_fn;
        for (int p = 0; p <= n; ++p)
        {
            s.max_deviation = std::max(s.max_deviation,
                                       (trace.empirical(p) - flow.eta(p)).cwiseAbs().maxCoeff());
        }
        if (options.normalized)
            s.w_normalized = s.w / sigma;
        if (config.record.doob_residuals)
        {
            s.residual_am = doob.residual_am();
            s.residual_wbl = doob.residual_wbl();
        }
        if (config.record.per_step)
        {
            s.delta_m = trace.delta_m;
            s.delta_c = trace.delta_c;
        }
    };

    const int threads = std::max(1, std::min(options.threads, n_reps));
    if (threads == 1)
    {
        for (int rep = 0; rep < n_reps; ++rep)
            run_one(rep);
        return results;
    }

    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (int t = 0; t < threads; ++t)
    {
        pool.emplace_back([&] {
            for (int rep = next++; rep < n_reps && !failed; rep = next++)
            {
                try
                {
                    run_one(rep);
                }
                catch (...)
                {
                    if (!failed.exchange(true))
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

int default_thread_count()
{
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1)
        hw = 1;
    if (const char* env = std::getenv("FKBENCH_THREADS"))
    {
        const int cap = std::atoi(env);
        if (cap >= 1)
            return std::min(cap, hw);
    }
    return hw;
}

} // namespace fkbench
