#include "fixtures.hpp"

#include "fkbench/errors.hpp"
#include "fkbench/particles.hpp"
#include "fkbench/zoo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fkbench;

namespace {

struct Moments
{
    double mean = 0.0;
    double var = 0.0;
    double se() const { return std::sqrt(var / count); }
    int count = 0;
};

Moments moments(const std::vector<double>& xs)
{
    Moments out;
    out.count = static_cast<int>(xs.size());
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / out.count;
    for (double x : xs)
        out.var += (x - out.mean) * (x - out.mean);
    out.var /= out.count - 1;
    return out;
}

RunConfig config(int n_particles, std::uint64_t seed, int horizon)
{
    RunConfig c;
    c.n_particles = n_particles;
    c.seed = seed;
    c.horizon = horizon;
    return c;
}

Vector matrix_power_flow(const Vector& eta0, const Matrix& m, int n)
{
    Vector out = eta0;
    for (int i = 0; i < n; ++i)
        out = (out.transpose() * m).transpose();
    return out;
}

} // namespace

// =============================================================================
// initialization and one step
// =============================================================================

TEST(InitParticles, PointMassPlacesEveryParticle)
{
    auto model = fixtures::two_state(2);
    model.eta0 << 0.0, 1.0;
    const ParticleCloud cloud = init_particles(config(500, 3, 2), model);
    EXPECT_EQ(cloud.counts(2)[1], 500);
}

TEST(InitParticles, CountsAreBinomial)
{
    auto model = fixtures::two_state(1);
    model.eta0 << 0.3, 0.7;
    std::vector<double> fractions;
    for (std::uint64_t seed = 0; seed < 2000; ++seed)
        fractions.push_back(init_particles(config(50, seed, 1), model).empirical(2)[0]);
    const Moments m = moments(fractions);
    EXPECT_NEAR(m.mean, 0.3, 5 * m.se());
    // Var of the fraction is p(1-p)/N; its standard error is about var * sqrt(2/R).
    const double expected = 0.3 * 0.7 / 50;
    EXPECT_NEAR(m.var, expected, 5 * expected * std::sqrt(2.0 / 2000));
}

TEST(StepParticles, ConditionalMeanIsPhi)
{
    auto model = fixtures::three_state(2);
    const McKeanSpec spec = McKeanSpec::constant(2, 0.3);
    ParticleCloud cloud;
    cloud.states = {0, 0, 1, 2, 2, 2, 1, 0, 2, 1};
    const Vector phi = step_phi(model, cloud.empirical(3), 0);

    std::vector<std::vector<double>> per_state(3);
    for (std::uint64_t seed = 0; seed < 10000; ++seed)
    {
        const Vector next = step_particles(cloud, spec, model, seed).empirical(3);
        for (int x = 0; x < 3; ++x)
            per_state[static_cast<std::size_t>(x)].push_back(next[x]);
    }
    for (int x = 0; x < 3; ++x)
    {
        const Moments m = moments(per_state[static_cast<std::size_t>(x)]);
        EXPECT_NEAR(m.mean, phi[x], 5 * m.se()) << "state " << x;
    }
}

TEST(StepParticles, SingleStateSpaceIsDeterministic)
{
    FeynmanKacModel model;
    model.horizon = 3;
    model.dims.assign(4, 1);
    model.kernels.assign(3, Matrix::Ones(1, 1));
    model.potentials.assign(4, Vector::Constant(1, 2.0));
    model.eta0 = Vector::Ones(1);
    TestFunction f;
    f.values.assign(4, Vector::Constant(1, 3.0));
    const RunTrace trace = simulate_run(config(20, 9, 3), McKeanSpec::constant(3, 0.5), model, f);
    for (const auto& counts : trace.counts)
        EXPECT_EQ(counts[0], 20);
    for (double dm : trace.delta_m)
        EXPECT_EQ(dm, 0.0);
    EXPECT_EQ(trace.increasing_process(), 0.0);
}

// =============================================================================
// reductions
// =============================================================================

TEST(Reduction, SingleParticleFollowsMarkovChain)
{
    // With one particle and epsilon = 0 the selection picks the particle
    // itself, so it moves as the unweighted chain.
    auto model = fixtures::three_state(3);
    const Vector law = [&] {
        Vector v = model.eta0;
        for (int q = 1; q <= 3; ++q)
            v = (v.transpose() * model.kernel_into(q)).transpose();
        return v;
    }();
    const McKeanSpec spec = McKeanSpec::constant(3, 0.0);
    std::vector<double> hits;
    for (std::uint64_t seed = 0; seed < 10000; ++seed)
    {
        const RunTrace trace = simulate_run(config(1, seed, 3), spec, model, fixtures::indicator(model, 2));
        hits.push_back(static_cast<double>(trace.counts[3][2]));
    }
    const Moments m = moments(hits);
    EXPECT_NEAR(m.mean, law[2], 5 * m.se());
}

TEST(Reduction, UnitPotentialWithFullEpsilonGivesIndependentChains)
{
    // G = 1 and epsilon = 1 make K(x, .) = M(x, .): the particles are
    // independent chains and the terminal count is binomial.
    auto model = fixtures::two_state(4, true);
    const McKeanSpec spec = McKeanSpec::constant(4, 1.0);
    const Vector law = matrix_power_flow(model.eta0, model.kernels[0], 4);
    const Matrix k = mckean_kernel(model, spec, model.eta0, 0);
    EXPECT_LT((k - model.kernels[0]).cwiseAbs().maxCoeff(), kAlgebraicTol);

    const int n_particles = 40;
    const int reps = 4000;
    std::vector<double> fractions;
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(reps); ++seed)
    {
        const RunTrace trace = simulate_run(config(n_particles, seed, 4), spec, model,
                                            fixtures::indicator(model, 0));
        fractions.push_back(trace.empirical(4)[0]);
    }
    const Moments m = moments(fractions);
    EXPECT_NEAR(m.mean, law[0], 5 * m.se());
    const double expected = law[0] * law[1] / n_particles;
    EXPECT_NEAR(m.var, expected, 5 * expected * std::sqrt(2.0 / reps));
}

// =============================================================================
// increasing process and martingale increments
// =============================================================================

TEST(IncreasingProcess, IncrementConvergesOnRoundedFlow)
{
    auto model = fixtures::three_state(3);
    const McKeanSpec spec = McKeanSpec::constant(3, 0.2);
    const FlowAnalytics flow = exact_flow(model);
    const Vector phi = fixtures::indicator(model, 1).at(2);
    const double exact = conditional_variance(model, spec, flow.eta(1), 2, phi);

    double previous_gap = 1.0;
    for (int n_particles : {100, 10000, 1000000})
    {
        ParticleCloud cloud;
        cloud.time = 1;
        for (int x = 0; x < 3; ++x)
        {
            const auto share = static_cast<int>(std::lround(flow.eta(1)[x] * n_particles));
            cloud.states.insert(cloud.states.end(), static_cast<std::size_t>(share), x);
        }
        const double gap = std::abs(increasing_process_increment(model, spec, &cloud, phi, 2) - exact);
        EXPECT_LE(gap, previous_gap);
        previous_gap = gap;
    }
    EXPECT_LT(previous_gap, 1e-5);
}

TEST(IncreasingProcess, MatchesScaledSquaredIncrement)
{
    // E[N (Delta M_n)^2] = E[Delta C_n^N]: both are estimated on the same runs.
    auto model = fixtures::three_state(2);
    const McKeanSpec spec = McKeanSpec::constant(2, 0.25);
    const TestFunction f = fixtures::indicator(model, 0);
    const int n_particles = 25;
    std::vector<double> scaled_sq;
    std::vector<double> delta_c;
    for (std::uint64_t seed = 0; seed < 8000; ++seed)
    {
        const RunTrace trace = simulate_run(config(n_particles, seed, 2), spec, model, f);
        scaled_sq.push_back(n_particles * trace.delta_m[2] * trace.delta_m[2]);
        delta_c.push_back(trace.delta_c[2]);
    }
    const Moments sq = moments(scaled_sq);
    const Moments dc = moments(delta_c);
    EXPECT_NEAR(sq.mean, dc.mean, 5 * std::hypot(sq.se(), dc.se()));
}

TEST(IncreasingProcess, MartingaleIncrementsHaveMeanZero)
{
    auto model = fixtures::three_state(3);
    const McKeanSpec spec = McKeanSpec::constant(3, 0.1);
    const TestFunction f = fixtures::indicator(model, 2);
    std::vector<std::vector<double>> increments(4);
    for (std::uint64_t seed = 0; seed < 4000; ++seed)
    {
        const RunTrace trace = simulate_run(config(30, seed, 3), spec, model, f);
        for (int n = 0; n <= 3; ++n)
            increments[static_cast<std::size_t>(n)].push_back(trace.delta_m[static_cast<std::size_t>(n)]);
    }
    for (const auto& xs : increments)
    {
        const Moments m = moments(xs);
        EXPECT_NEAR(m.mean, 0.0, 5 * m.se());
    }
}

// =============================================================================
// Doob decompositions
// =============================================================================

TEST(Doob, IdentitiesHoldOnEveryRun)
{
    const ZooEntry hmm = build("binary_hmm");
    for (double scale : {0.0, 0.5, 1.0})
    {
        const McKeanSpec spec = build("binary_hmm", {{"epsilon_scale", scale}}).spec;
        const FlowAnalytics flow = analyze(hmm.model, spec, hmm.function, hmm.model.horizon);
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            const RunTrace trace = simulate_run(config(200, seed, hmm.model.horizon), spec,
                                                hmm.model, hmm.function);
            const DoobSeries d = doob_terms(hmm.model, spec, flow, trace);
            EXPECT_LE(d.residual_am(), 1e-10);
            EXPECT_LE(d.residual_wbl(), 1e-10);
        }
    }
}

TEST(Doob, TerminalTermsMatchDirectDefinitions)
{
    auto model = fixtures::three_state(3);
    const McKeanSpec spec = McKeanSpec::constant(3, 0.3);
    const TestFunction f = fixtures::indicator(model, 1);
    const FlowAnalytics flow = analyze(model, spec, f, 3);
    const RunTrace trace = simulate_run(config(64, 77, 3), spec, model, f);
    const DoobSeries d = doob_terms(model, spec, flow, trace);

    // f_{n,n} = f_n - eta_n(f_n), so W_{n,n} is the centered terminal error.
    const double root_n = 8.0;
    const double direct = root_n * (trace.empirical(3).dot(f.at(3)) - flow.eta(3).dot(f.at(3)));
    EXPECT_NEAR(d.w.back(), direct, 1e-12);
    // At p = 0 there is no predictable part.
    EXPECT_EQ(d.a[0], 0.0);
    EXPECT_EQ(d.b[0], 0.0);
    EXPECT_NEAR(d.l[0], d.w[0], 1e-12);
}

TEST(Doob, MartingalePartHasMeanZero)
{
    const ZooEntry hmm = build("binary_hmm");
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, hmm.model.horizon);
    std::vector<double> ls;
    std::vector<double> ws;
    for (std::uint64_t seed = 0; seed < 3000; ++seed)
    {
        const RunTrace trace = simulate_run(config(100, seed, hmm.model.horizon), hmm.spec,
                                            hmm.model, hmm.function);
        const DoobSeries d = doob_terms(hmm.model, hmm.spec, flow, trace);
        ls.push_back(d.l.back());
        ws.push_back(d.w.back());
    }
    const Moments l = moments(ls);
    EXPECT_NEAR(l.mean, 0.0, 5 * l.se());
    // The bias of W is O(1/sqrt(N)); at N = 100 it stays within a small band.
    const Moments w = moments(ws);
    EXPECT_LT(std::abs(w.mean), 5 * w.se() + 1.0 / std::sqrt(100.0));
}

// =============================================================================
// replicates
// =============================================================================

TEST(Replicates, SameSeedSameResultAnyThreadCount)
{
    const ZooEntry hmm = build("binary_hmm");
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, hmm.model.horizon);
    RunConfig c = config(50, 1234, hmm.model.horizon);
    c.record.doob_residuals = true;
    c.record.per_step = true;
    const auto one = simulate_replicates(c, hmm.spec, hmm.model, hmm.function, flow, 12, {1, true});
    const auto three = simulate_replicates(c, hmm.spec, hmm.model, hmm.function, flow, 12, {3, true});
    ASSERT_EQ(one.size(), three.size());
    for (std::size_t r = 0; r < one.size(); ++r)
    {
        EXPECT_EQ(one[r].replicate, r);
        EXPECT_EQ(one[r].w, three[r].w);
        EXPECT_EQ(one[r].c_n, three[r].c_n);
        EXPECT_EQ(*one[r].w_normalized, *three[r].w_normalized);
        EXPECT_EQ(one[r].delta_m, three[r].delta_m);
        EXPECT_LE(*one[r].residual_am, 1e-10);
    }
    EXPECT_NE(one[0].w, one[1].w);
}

TEST(Replicates, DifferentSeedsDiffer)
{
    const ZooEntry hmm = build("binary_hmm");
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, hmm.model.horizon);
    const auto a = simulate_replicates(config(50, 1, 5), hmm.spec, hmm.model, hmm.function, flow, 4);
    const auto b = simulate_replicates(config(50, 2, 5), hmm.spec, hmm.model, hmm.function, flow, 4);
    int same = 0;
    for (std::size_t r = 0; r < a.size(); ++r)
        same += a[r].w == b[r].w;
    EXPECT_LT(same, 4);
}

TEST(Replicates, NormalizedNeedsPositiveVariance)
{
    const ZooEntry flat = build("constant_function");
    const FlowAnalytics flow = analyze(flat.model, flat.spec, flat.function, flat.model.horizon);
    EXPECT_THROW(simulate_replicates(config(10, 0, 5), flat.spec, flat.model, flat.function, flow, 2,
                                     {1, true}),
                 DegenerateFunction);
    const auto raw = simulate_replicates(config(10, 0, 5), flat.spec, flat.model, flat.function, flow, 2);
    EXPECT_EQ(raw[0].w, 0.0);
}

TEST(Replicates, RejectsMismatchedTarget)
{
    const ZooEntry hmm = build("binary_hmm");
    const FlowAnalytics flow = analyze(hmm.model, hmm.spec, hmm.function, 3);
    EXPECT_THROW(simulate_replicates(config(10, 0, 5), hmm.spec, hmm.model, hmm.function, flow, 1),
                 InvalidArgument);
    EXPECT_THROW(init_particles(config(0, 0, 5), hmm.model), InvalidArgument);
}

TEST(InitParticles, LargeCloudFrequencyWithinFiveStandardErrors)
{
    auto model = fixtures::two_state(1);
    const ParticleCloud cloud = init_particles(config(100000, 21, 1), model);
    const double freq = cloud.empirical(2)[0];
    EXPECT_NEAR(freq, 0.5, 5 * std::sqrt(0.25 / 100000));
    EXPECT_EQ(init_particles(config(100000, 21, 1), model).states, cloud.states);
}

TEST(Increments, ConstantFunctionGivesZero)
{
    auto model = fixtures::three_state(2);
    const McKeanSpec spec = McKeanSpec::constant(2, 0.2);
    const Vector flat = Vector::Constant(3, 0.4);
    const ParticleCloud prev = init_particles(config(30, 5, 2), model);
    const ParticleCloud next = step_particles(prev, spec, model, 5);
    EXPECT_EQ(martingale_increment(model, spec, &prev, next, flat), 0.0);
    EXPECT_NEAR(increasing_process_increment(model, spec, &prev, flat, 1), 0.0, 1e-16);
}

TEST(Increments, FrozenPastGivesMeanZeroIncrement)
{
    auto model = fixtures::three_state(2);
    const McKeanSpec spec = McKeanSpec::constant(2, 0.35);
    const ParticleCloud prev = init_particles(config(12, 8, 2), model);
    const Vector f = fixtures::indicator(model, 1).at(1);
    std::vector<double> increments;
    for (std::uint64_t seed = 0; seed < 10000; ++seed)
        increments.push_back(martingale_increment(model, spec, &prev, step_particles(prev, spec, model, seed), f));
    const Moments m = moments(increments);
    EXPECT_NEAR(m.mean, 0.0, 5 * m.se());
}

TEST(IncreasingProcess, ParticleIncrementApproachesLimit)
{
    const ZooEntry ring = build("ring_walk", {{"epsilon_scale", 0.5}});
    const int n = ring.model.horizon;
    const FlowAnalytics flow = analyze(ring.model, ring.spec, ring.function, n);
    const VarianceTerms limit = increasing_process_limit(ring.model, ring.spec, flow, ring.function.values);
    std::vector<double> mean_gap;
    for (int n_particles : {100, 10000})
    {
        const auto stats = simulate_replicates(config(n_particles, 55, n), ring.spec, ring.model,
                                               ring.function, flow, 50);
        double gap = 0.0;
        for (const auto& s : stats)
            gap += std::abs(s.last_delta_c - limit.delta_c.back()) / 50.0;
        mean_gap.push_back(gap);
    }
    // O(1/sqrt(N)) fluctuations: a factor of ten between the two sizes.
    EXPECT_LT(mean_gap[1], mean_gap[0] / 4);
    EXPECT_LT(mean_gap[1], 0.01);
}
