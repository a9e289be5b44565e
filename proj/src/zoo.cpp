#include "fkbench/zoo.hpp"

#include "fkbench/errors.hpp"
#include "fkbench/rng.hpp"

#include <cmath>
#include <numbers>

namespace fkbench {

namespace {

const ZooParams& defaults_for(const std::string& name);

ZooParams resolve(const std::string& name, const ZooParams& overrides)
{
    ZooParams params = defaults_for(name);
    for (const auto& [key, value] : overrides)
    {
        if (!params.contains(key))
            throw UnknownEntry("zoo entry '" + name + "' has no parameter '" + key + "'");
        params[key] = value;
    }
    return params;
}

int as_int(const ZooParams& params, const std::string& key)
{
    return static_cast<int>(std::lround(params.at(key)));
}

McKeanSpec scaled_spec(const FeynmanKacModel& model, double scale)
{
    if (scale < 0.0 || scale > 1.0)
        throw EpsilonOutOfRange("epsilon_scale must lie in [0, 1]");
    McKeanSpec spec;
    for (int n = 0; n < model.horizon; ++n)
        spec.epsilons.push_back(scale / model.potential(n).maxCoeff());
    return spec;
}

TestFunction indicator(const FeynmanKacModel& model, int state)
{
    TestFunction f;
    for (int n = 0; n <= model.horizon; ++n)
    {
        Vector v = Vector::Zero(model.dim(n));
        v[state] = 1.0;
        f.values.push_back(v);
    }
    return f;
}

Matrix two_state_kernel(double p01, double p10)
{
    Matrix m(2, 2);
    m << 1.0 - p01, p01, p10, 1.0 - p10;
    return m;
}

FeynmanKacModel binary_hmm_model(const ZooParams& params)
{
    const int horizon = as_int(params, "horizon");
    if (horizon < 0)
        throw InvalidArgument("horizon must be nonnegative");
    const double p01 = params.at("p01");
    const double p10 = params.at("p10");
    const double sd = params.at("obs_sd");
    const double mean1 = params.at("obs_mean1");
    const std::vector<double> obs = binary_hmm_observations(params);

    FeynmanKacModel model;
    model.horizon = horizon;
    model.dims.assign(static_cast<std::size_t>(horizon) + 1, 2);
    model.eta0 = Vector(2);
    model.eta0 << 1.0 - params.at("initial1"), params.at("initial1");
    for (int n = 0; n < horizon; ++n)
        model.kernels.push_back(two_state_kernel(p01, p10));
    for (int n = 0; n <= horizon; ++n)
    {
        Vector g(2);
        const double y = obs[static_cast<std::size_t>(n)];
        g << std::exp(-0.5 * (y / sd) * (y / sd)), std::exp(-0.5 * ((y - mean1) / sd) * ((y - mean1) / sd));
        model.potentials.push_back(g);
    }
    return model;
}

const ZooParams& defaults_for(const std::string& name)
{
    static const std::map<std::string, ZooParams> table = {
        {"binary_hmm",
         {{"horizon", 5}, {"p01", 0.005}, {"p10", 0.5}, {"initial1", 0.005}, {"obs_mean1", 1.0},
          {"obs_sd", 1.0}, {"seed", 2005}, {"epsilon_scale", 0.0}}},
        {"ring_walk",
         {{"horizon", 6}, {"states", 4}, {"holding", 0.5}, {"ratio", 2.0}, {"epsilon_scale", 0.0}}},
        {"path_genealogy",
         {{"horizon", 4}, {"p01", 0.005}, {"p10", 0.5}, {"initial1", 0.005}, {"obs_mean1", 1.0},
          {"obs_sd", 1.0}, {"seed", 2005}, {"epsilon_scale", 0.0}}},
        {"plain_markov", {{"horizon", 5}, {"p01", 0.2}, {"p10", 0.3}, {"epsilon_scale", 0.0}}},
        {"iid_reduction", {{"p1", 0.01}}},
        {"constant_function",
         {{"horizon", 5}, {"p01", 0.005}, {"p10", 0.5}, {"initial1", 0.005}, {"obs_mean1", 1.0},
          {"obs_sd", 1.0}, {"seed", 2005}, {"epsilon_scale", 0.0}}},
    };
    const auto it = table.find(name);
    if (it == table.end())
        throw UnknownEntry("no zoo entry named '" + name + "'");
    return it->second;
}

const std::map<std::string, std::string>& notes_table()
{
    static const std::map<std::string, std::string> notes = {
        {"binary_hmm",
         "Two-state hidden Markov chain filtered against a fixed synthetic Gaussian observation "
         "sequence; potentials are observation likelihoods. State 1 is rare, f = 1{state 1}."},
        {"ring_walk",
         "Lazy nearest-neighbour walk on a ring with linearly increasing potentials of fixed "
         "max/min ratio; satisfies the (m, r, rho) minorization with m = 2 for 4 states."},
        {"path_genealogy",
         "Path-space expansion of binary_hmm: states are whole trajectories coded in base 2, "
         "potentials read the terminal value only. Horizon <= 8."},
        {"plain_markov", "Unit potentials: the flow is the Markov law eta0 M^n."},
        {"iid_reduction",
         "Horizon 0 with eta0 = (1 - p1, p1): the fluctuation is a normalized binomial."},
        {"constant_function",
         "binary_hmm with a constant test function; sigma^2 = 0 by construction."},
    };
    return notes;
}

} // namespace

std::vector<ZooListing> zoo_list()
{
    std::vector<ZooListing> out;
    for (const auto& [name, note] : notes_table())
        out.push_back({name, defaults_for(name), note});
    return out;
}

std::vector<double> binary_hmm_observations(const ZooParams& params)
{
    const int horizon = static_cast<int>(std::lround(params.at("horizon")));
    const auto seed = static_cast<std::uint64_t>(std::llround(params.at("seed")));
    CounterStream stream(split_key(seed, 0x0b5ull));
    const double p01 = params.at("p01");
    const double p10 = params.at("p10");
    int state = stream.uniform() < params.at("initial1") ? 1 : 0;
    std::vector<double> obs;
    for (int n = 0; n <= horizon; ++n)
    {
        if (n > 0)
        {
            const double u = stream.uniform();
            state = state == 0 ? (u < p01 ? 1 : 0) : (u < p10 ? 0 : 1);
        }
        // Box-Muller on two fresh uniforms; 1 - u keeps the log argument positive.
        const double u1 = 1.0 - stream.uniform();
        const double u2 = stream.uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        obs.push_back(state * params.at("obs_mean1") + params.at("obs_sd") * z);
    }
    return obs;
}

long long encode_path(const std::vector<int>& path, int base)
{
    long long code = 0;
    long long scale = 1;
    for (int x : path)
    {
        code += x * scale;
        scale *= base;
    }
    return code;
}

std::vector<int> decode_path(long long code, int length, int base)
{
    std::vector<int> path(static_cast<std::size_t>(length));
    for (auto& x : path)
    {
        x = static_cast<int>(code % base);
        code /= base;
    }
    return path;
}

FeynmanKacModel path_space_model(const FeynmanKacModel& base)
{
    const int d = base.dim(0);
    for (int n = 0; n <= base.horizon; ++n)
    {
        if (base.dim(n) != d)
            throw ShapeMismatch("path expansion needs a common base state space");
    }
    if (base.horizon > kMaxPathHorizon)
    {
        throw HorizonTooLargeForPathSpace("horizon " + std::to_string(base.horizon)
                                          + " exceeds " + std::to_string(kMaxPathHorizon));
    }

    FeynmanKacModel path;
    path.horizon = base.horizon;
    path.eta0 = base.eta0;
    long long size = d;
    for (int n = 0; n <= base.horizon; ++n)
    {
        path.dims.push_back(static_cast<int>(size));
        const long long last_scale = size / d;
        Vector g(size);
        for (long long code = 0; code < size; ++code)
            g[code] = base.potential(n)[code / last_scale];
        path.potentials.push_back(g);
        if (n < base.horizon)
        {
            const Matrix& m = base.kernel_into(n + 1);
            Matrix k = Matrix::Zero(size, size * d);
            for (long long code = 0; code < size; ++code)
            {
                const long long last = code / last_scale;
                for (int y = 0; y < d; ++y)
                    k(code, code + y * size) = m(last, y);
            }
            path.kernels.push_back(k);
        }
        size *= d;
    }
    return path;
}

ZooEntry build(const std::string& name, const ZooParams& overrides)
{
    ZooEntry entry;
    entry.name = name;
    entry.params = resolve(name, overrides);
    entry.notes = notes_table().at(name);
    const ZooParams& params = entry.params;

    if (name == "binary_hmm" || name == "constant_function")
    {
        entry.model = binary_hmm_model(params);
        entry.spec = scaled_spec(entry.model, params.at("epsilon_scale"));
        entry.function = indicator(entry.model, 1);
        if (name == "constant_function")
        {
            for (auto& v : entry.function.values)
                v.setConstant(0.5);
        }
    }
    else if (name == "path_genealogy")
    {
        if (as_int(params, "horizon") > kMaxPathHorizon)
        {
            throw HorizonTooLargeForPathSpace("horizon " + std::to_string(as_int(params, "horizon"))
                                              + " exceeds " + std::to_string(kMaxPathHorizon));
        }
        entry.model = path_space_model(binary_hmm_model(params));
        entry.spec = scaled_spec(entry.model, params.at("epsilon_scale"));
        for (int n = 0; n <= entry.model.horizon; ++n)
        {
            const long long last_scale = entry.model.dim(n) / 2;
            Vector v(entry.model.dim(n));
            for (Eigen::Index code = 0; code < v.size(); ++code)
                v[code] = code / last_scale == 1 ? 1.0 : 0.0;
            entry.function.values.push_back(v);
        }
    }
    else if (name == "ring_walk")
    {
        const int horizon = as_int(params, "horizon");
        const int d = as_int(params, "states");
        const double hold = params.at("holding");
        const double ratio = params.at("ratio");
        if (d < 2 || hold < 0.0 || hold > 1.0 || ratio < 1.0 || horizon < 0)
            throw InvalidArgument("ring_walk needs states >= 2, holding in [0,1], ratio >= 1");
        Matrix m = Matrix::Zero(d, d);
        for (int x = 0; x < d; ++x)
        {
            m(x, x) += hold;
            m(x, (x + 1) % d) += 0.5 * (1.0 - hold);
            m(x, (x + d - 1) % d) += 0.5 * (1.0 - hold);
        }
        Vector g(d);
        for (int x = 0; x < d; ++x)
            g[x] = 1.0 + (ratio - 1.0) * x / (d - 1);
        FeynmanKacModel& model = entry.model;
        model.horizon = horizon;
        model.dims.assign(static_cast<std::size_t>(horizon) + 1, d);
        model.eta0 = Vector::Zero(d);
        model.eta0[0] = 1.0;
        model.kernels.assign(static_cast<std::size_t>(horizon), m);
        model.potentials.assign(static_cast<std::size_t>(horizon) + 1, g);
        entry.spec = scaled_spec(model, params.at("epsilon_scale"));
        entry.function = indicator(model, 0);
    }
    else if (name == "plain_markov")
    {
        const int horizon = as_int(params, "horizon");
        if (horizon < 0)
            throw InvalidArgument("horizon must be nonnegative");
        FeynmanKacModel& model = entry.model;
        model.horizon = horizon;
        model.dims.assign(static_cast<std::size_t>(horizon) + 1, 2);
        model.eta0 = Vector(2);
        model.eta0 << 1.0, 0.0;
        model.kernels.assign(static_cast<std::size_t>(horizon),
                             two_state_kernel(params.at("p01"), params.at("p10")));
        model.potentials.assign(static_cast<std::size_t>(horizon) + 1, Vector::Ones(2));
        entry.spec = scaled_spec(model, params.at("epsilon_scale"));
        entry.function = indicator(model, 1);
    }
    else if (name == "iid_reduction")
    {
        const double p1 = params.at("p1");
        if (!(p1 > 0.0 && p1 < 1.0))
            throw InvalidArgument("iid_reduction needs p1 in (0, 1)");
        FeynmanKacModel& model = entry.model;
        model.horizon = 0;
        model.dims = {2};
        model.eta0 = Vector(2);
        model.eta0 << 1.0 - p1, p1;
        model.potentials = {Vector::Ones(2)};
        entry.function = indicator(model, 1);
    }

    validate_model(entry.model);
    validate_spec(entry.model, entry.spec);
    return entry;
}

} // namespace fkbench
