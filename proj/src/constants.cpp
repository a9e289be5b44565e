#include "fkbench/constants.hpp"

#include "fkbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fkbench {

namespace {

double falling_factorial(int m, int k)
{
    double out = 1.0;
    for (int i = 0; i < k; ++i)
        out *= static_cast<double>(m - i);
    return out;
}

} // namespace

double burkholder_d(int p)
{
    if (p < 1)
        throw InvalidArgument("burkholder_d needs p >= 1");
    if (p % 2 == 0)
    {
        const int n = p / 2;
        return falling_factorial(p, n) * std::pow(2.0, -n);
    }
    const int n = (p + 1) / 2;
    const double half = n - 0.5;
    return falling_factorial(p, n) / std::sqrt(half) * std::pow(2.0, -half);
}

MixingBounds mixing_bounds(int m, double r, double rho, int n, double gamma)
{
    if (m < 1 || r < 1.0 || !(rho > 0.0) || rho > 1.0)
        throw InvalidArgument("mixing bounds need m >= 1, r >= 1, rho in (0, 1]");
    MixingBounds out;
    out.m = m;
    out.r = r;
    out.rho = rho;
    out.gamma = gamma;
    const double rho3 = rho * rho * rho;
    const double r_pow = std::pow(r, 2 * m - 1);
    out.r_bound = std::pow(r, m) / rho;
    out.b_bound = 2.0 * m * r_pow / rho3;
    out.a3_bound = 8.0 * std::sqrt(2.0) * m * r_pow * (1.0 + gamma) / rho3;

    const double contraction = std::pow(r, m - 1) * rho * rho;
    if (contraction < 1.0)
    {
        std::vector<double> betas;
        for (int lag = 0; lag <= n; ++lag)
            betas.push_back(std::pow(1.0 - contraction, lag / m));
        out.beta_bounds = std::move(betas);
    }
    return out;
}

Matrix composed_kernel(const FeynmanKacModel& model, int n, int m)
{
    Matrix out = Matrix::Identity(model.dim(n), model.dim(n));
    for (int q = n + 1; q <= n + m; ++q)
        out = out * model.kernel_into(q);
    return out;
}

double mixing_rho(const FeynmanKacModel& model, int m)
{
    double rho = 1.0;
    for (int n = 0; n + m <= model.horizon; ++n)
    {
        const Matrix k = composed_kernel(model, n, m);
        for (Eigen::Index z = 0; z < k.cols(); ++z)
        {
            const double hi = k.col(z).maxCoeff();
            const double lo = k.col(z).minCoeff();
            if (hi > 0.0)
                rho = std::min(rho, lo / hi);
        }
    }
    return rho;
}

void check_mixing(const FeynmanKacModel& model, int m, double rho)
{
    for (int n = 0; n + m <= model.horizon; ++n)
    {
        const Matrix k = composed_kernel(model, n, m);
        for (Eigen::Index z = 0; z < k.cols(); ++z)
        {
            const double hi = k.col(z).maxCoeff();
            const double lo = k.col(z).minCoeff();
            if (lo < rho * hi * (1.0 - kAlgebraicTol))
            {
                throw HypothesisNotSatisfied("M_{" + std::to_string(n) + "," + std::to_string(n + m)
                                             + "} column " + std::to_string(z)
                                             + " violates the minorization with rho = "
                                             + std::to_string(rho));
            }
        }
    }
}

MixingVerification verify_mixing(const FeynmanKacModel& model, const FlowAnalytics& flow, int m,
                                 double rho, double gamma)
{
    check_mixing(model, m, rho);
    const std::vector<double> rs = validate_model(model);
    const double r = *std::max_element(rs.begin(), rs.end());

    MixingVerification out;
    out.bounds = mixing_bounds(m, r, rho, model.horizon, gamma);
    for (int n = 0; n + m <= model.horizon; ++n)
        out.max_ratio = std::max(out.max_ratio, flow.ratio(n, n + m));
    for (int n = 0; n <= model.horizon; ++n)
        out.max_b = std::max(out.max_b, concentration_b(flow, n));
    out.ratio_ok = out.max_ratio <= out.bounds.r_bound * (1.0 + kProductTol);
    out.b_ok = out.max_b <= out.bounds.b_bound * (1.0 + kProductTol);
    return out;
}

McKeanGamma mckean_gamma(const McKeanSpec& spec)
{
    for (double eps : spec.epsilons)
    {
        if (!std::isfinite(eps) || eps < 0.0)
            throw EpsilonOutOfRange("epsilon must be a nonnegative constant");
    }
    McKeanGamma out;
    out.combined = std::max(out.gamma, out.gamma_prime);
    out.tilde = out.combined + 1.0;
    return out;
}

HResidual h_condition(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const FlowAnalytics& flow, const Vector& mu, int n, const Vector& f)
{
    const Matrix k_mu = mckean_kernel(model, spec, mu, n);
    const Matrix k_eta = mckean_kernel(model, spec, flow.eta(n), n);
    HResidual out;
    out.lhs = (k_mu * f - k_eta * f).cwiseAbs().maxCoeff();
    const Vector h = f.array() - flow.eta(n + 1).dot(f);
    out.rhs = std::abs(step_phi(model, mu, n).dot(h));
    return out;
}

} // namespace fkbench
