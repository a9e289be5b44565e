#include "fkbench/model.hpp"

#include "fkbench/errors.hpp"

#include <cmath>
#include <string>

namespace fkbench {

namespace {

std::string at_time(int n)
{
    return " at time " + std::to_string(n);
}

void require_law(const Vector& mu, int expected_dim, const char* what)
{
    if (mu.size() != expected_dim)
    {
        throw ShapeMismatch(std::string(what) + " has length " + std::to_string(mu.size())
                            + ", expected " + std::to_string(expected_dim));
    }
}

} // namespace

double oscillation(const Vector& f)
{
    if (f.size() == 0)
        return 0.0;
    return f.maxCoeff() - f.minCoeff();
}

std::vector<double> validate_model(const FeynmanKacModel& model)
{
    if (model.horizon < 0)
        throw ShapeMismatch("horizon must be nonnegative");
    const auto steps = static_cast<std::size_t>(model.horizon);
    if (model.dims.size() != steps + 1)
        throw ShapeMismatch("dims must list horizon + 1 state-space sizes");
    if (model.kernels.size() != steps)
        throw ShapeMismatch("kernels must list one matrix per step");
    if (model.potentials.size() != steps + 1)
        throw ShapeMismatch("potentials must list horizon + 1 vectors");

    for (int n = 0; n <= model.horizon; ++n)
    {
        if (model.dim(n) < 1)
            throw ShapeMismatch("empty state space" + at_time(n));
    }

    for (int n = 0; n < model.horizon; ++n)
    {
        const Matrix& m = model.kernels[static_cast<std::size_t>(n)];
        if (m.rows() != model.dim(n) || m.cols() != model.dim(n + 1))
            throw ShapeMismatch("kernel into time " + std::to_string(n + 1) + " has wrong shape");
        for (Eigen::Index x = 0; x < m.rows(); ++x)
        {
            double total = 0.0;
            for (Eigen::Index y = 0; y < m.cols(); ++y)
            {
                const double v = m(x, y);
                if (!std::isfinite(v) || v < 0.0)
                {
                    throw NonStochasticKernel("negative or non-finite entry in kernel into time "
                                              + std::to_string(n + 1));
                }
                total += v;
            }
            if (std::abs(total - 1.0) > kAlgebraicTol)
            {
                throw NonStochasticKernel("row " + std::to_string(x) + " of kernel into time "
                                          + std::to_string(n + 1) + " sums to "
                                          + std::to_string(total));
            }
        }
    }

    std::vector<double> ratios;
    ratios.reserve(steps + 1);
    for (int n = 0; n <= model.horizon; ++n)
    {
        const Vector& g = model.potential(n);
        if (g.size() != model.dim(n))
            throw ShapeMismatch("potential has wrong length" + at_time(n));
        for (Eigen::Index x = 0; x < g.size(); ++x)
        {
            if (!std::isfinite(g[x]) || !(g[x] > 0.0))
                throw NonPositivePotential("G(" + std::to_string(x) + ") <= 0" + at_time(n));
        }
        ratios.push_back(g.maxCoeff() / g.minCoeff());
    }

    if (model.eta0.size() != model.dim(0))
        throw BadInitialLaw("eta0 has wrong length");
    for (Eigen::Index x = 0; x < model.eta0.size(); ++x)
    {
        if (!std::isfinite(model.eta0[x]) || model.eta0[x] < 0.0)
            throw BadInitialLaw("negative or non-finite mass in eta0");
    }
    if (std::abs(model.eta0.sum() - 1.0) > kAlgebraicTol)
        throw BadInitialLaw("eta0 sums to " + std::to_string(model.eta0.sum()));

    return ratios;
}

void validate_spec(const FeynmanKacModel& model, const McKeanSpec& spec)
{
    if (spec.epsilons.size() != static_cast<std::size_t>(model.horizon))
    {
        throw EpsilonOutOfRange("expected " + std::to_string(model.horizon)
                                + " epsilons, got " + std::to_string(spec.epsilons.size()));
    }
    for (int n = 0; n < model.horizon; ++n)
    {
        const double eps = spec.epsilons[static_cast<std::size_t>(n)];
        if (!std::isfinite(eps) || eps < 0.0)
            throw EpsilonOutOfRange("epsilon must be nonnegative" + at_time(n));
        if (eps * model.potential(n).maxCoeff() > 1.0 + kAlgebraicTol)
            throw EpsilonOutOfRange("eps * G exceeds 1" + at_time(n));
    }
}

void validate_function(const FeynmanKacModel& model, const TestFunction& f, int n)
{
    if (n < 0 || n > model.horizon)
        throw InvalidArgument("time index " + std::to_string(n) + " outside model horizon");
    if (f.values.size() < static_cast<std::size_t>(n) + 1)
        throw ShapeMismatch("test function does not cover time " + std::to_string(n));
    for (int p = 0; p <= n; ++p)
    {
        const Vector& v = f.at(p);
        if (v.size() != model.dim(p))
            throw ShapeMismatch("test function has wrong length" + at_time(p));
        if (!v.allFinite())
            throw InvalidArgument("test function has non-finite entries" + at_time(p));
    }
}

Vector boltzmann_gibbs(const FeynmanKacModel& model, const Vector& mu, int n)
{
    const Vector& g = model.potential(n);
    require_law(mu, static_cast<int>(g.size()), "measure");
    Vector weighted = g.cwiseProduct(mu);
    const double mass = weighted.sum();
    if (!(mass > 0.0))
        throw ZeroMass("mu(G) vanishes" + at_time(n));
    return weighted / mass;
}

Vector step_phi(const FeynmanKacModel& model, const Vector& mu, int n)
{
    if (n < 0 || n >= model.horizon)
        throw InvalidArgument("no transition out of time " + std::to_string(n));
    const Vector selected = boltzmann_gibbs(model, mu, n);
    return model.kernel_into(n + 1).transpose() * selected;
}

Matrix mckean_kernel_from_phi(const FeynmanKacModel& model, const McKeanSpec& spec,
                              const Vector& phi, int n)
{
    const double eps = spec.epsilons.at(static_cast<std::size_t>(n));
    const Vector& g = model.potential(n);
    const Matrix& m = model.kernel_into(n + 1);
    Matrix k(m.rows(), m.cols());
    for (Eigen::Index x = 0; x < m.rows(); ++x)
    {
        const double w = eps * g[x];
        if (w < 0.0 || w > 1.0 + kAlgebraicTol)
            throw EpsilonOutOfRange("eps * G(" + std::to_string(x) + ") = " + std::to_string(w));
        k.row(x) = w * m.row(x) + (1.0 - w) * phi.transpose();
    }
    return k;
}

Matrix mckean_kernel(const FeynmanKacModel& model, const McKeanSpec& spec, const Vector& mu,
                     int n)
{
    return mckean_kernel_from_phi(model, spec, step_phi(model, mu, n), n);
}

double compatibility_residual(const FeynmanKacModel& model, const McKeanSpec& spec,
                              const Vector& mu, int n)
{
    const Vector phi = step_phi(model, mu, n);
    const Matrix k = mckean_kernel_from_phi(model, spec, phi, n);
    const Vector pushed = k.transpose() * mu;
    return (pushed - phi).cwiseAbs().maxCoeff();
}

} // namespace fkbench
