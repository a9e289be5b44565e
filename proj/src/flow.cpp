#include "fkbench/flow.hpp"

#include "fkbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fkbench {

FlowAnalytics exact_flow(const FeynmanKacModel& model)
{
    validate_model(model);
    FlowAnalytics flow;
    const auto size = static_cast<std::size_t>(model.horizon) + 1;
    flow.etas.reserve(size);
    flow.log_gamma1.reserve(size);
    flow.etas.push_back(model.eta0);
    flow.log_gamma1.push_back(0.0);
    for (int n = 0; n < model.horizon; ++n)
    {
        const Vector& eta = flow.etas.back();
        const double mass = eta.dot(model.potential(n));
        flow.log_gamma1.push_back(flow.log_gamma1.back() + std::log(mass));
        flow.etas.push_back(step_phi(model, eta, n));
    }
    return flow;
}

Matrix normalized_step(const FeynmanKacModel& model, const FlowAnalytics& flow, int q)
{
    const Vector& g = model.potential(q - 1);
    const double mass = flow.eta(q - 1).dot(g);
    return (g / mass).asDiagonal() * model.kernel_into(q);
}

double dobrushin(const Matrix& kernel)
{
    const Eigen::Index rows = kernel.rows();
    Matrix p = kernel;
    for (Eigen::Index x = 0; x < rows; ++x)
        p.row(x) /= p.row(x).sum();
    double worst = 0.0;
    for (Eigen::Index x = 0; x < rows; ++x)
    {
        for (Eigen::Index y = x + 1; y < rows; ++y)
            worst = std::max(worst, 0.5 * (p.row(x) - p.row(y)).cwiseAbs().sum());
    }
    return std::min(worst, 1.0);
}

void compute_semigroups(const FeynmanKacModel& model, FlowAnalytics& flow)
{
    const int horizon = model.horizon;
    const auto size = static_cast<std::size_t>(horizon) + 1;
    flow.qbar.assign(size, std::vector<Matrix>(size));
    flow.betas.assign(size, std::vector<double>(size, 0.0));
    flow.ratios.assign(size, std::vector<double>(size, 1.0));

    std::vector<Matrix> steps(size);
    for (int q = 1; q <= horizon; ++q)
        steps[static_cast<std::size_t>(q)] = normalized_step(model, flow, q);

    for (int n = 0; n <= horizon; ++n)
    {
        const auto un = static_cast<std::size_t>(n);
        flow.qbar[un][un] = Matrix::Identity(model.dim(n), model.dim(n));
        for (int p = n - 1; p >= 0; --p)
        {
            const auto up = static_cast<std::size_t>(p);
            flow.qbar[up][un] = steps[up + 1] * flow.qbar[up + 1][un];
        }
        for (int p = 0; p <= n; ++p)
        {
            const auto up = static_cast<std::size_t>(p);
            const Matrix& q = flow.qbar[up][un];
            const Vector mass = q.rowwise().sum();
            flow.ratios[up][un] = mass.maxCoeff() / mass.minCoeff();
            flow.betas[up][un] = dobrushin(q);
        }
    }

    flow.b_const.resize(size);
    for (int n = 0; n <= horizon; ++n)
        flow.b_const[static_cast<std::size_t>(n)] = concentration_b(flow, n);
}

void attach_function(const FeynmanKacModel& model, FlowAnalytics& flow, const TestFunction& f,
                     int n)
{
    validate_function(model, f, n);
    if (flow.qbar.empty())
        compute_semigroups(model, flow);
    const Vector centered = f.at(n).array() - flow.eta(n).dot(f.at(n));
    flow.target = n;
    flow.fpn.resize(static_cast<std::size_t>(n) + 1);
    for (int p = 0; p <= n; ++p)
        flow.fpn[static_cast<std::size_t>(p)] = flow.semigroup(p, n) * centered;
    flow.delta_c.clear();
    flow.sigma_sq = 0.0;
}

double conditional_variance(const FeynmanKacModel& model, const McKeanSpec& spec,
                            const Vector& mu, int p, const Vector& phi)
{
    if (p == 0)
    {
        const Vector& eta0 = model.eta0;
        const double mean = eta0.dot(phi);
        return eta0.dot((phi.array() - mean).square().matrix());
    }
    const Matrix k = mckean_kernel(model, spec, mu, p - 1);
    const Vector kphi = k * phi;
    double total = 0.0;
    for (Eigen::Index x = 0; x < k.rows(); ++x)
    {
        if (mu[x] == 0.0)
            continue;
        const double row = k.row(x).dot((phi.array() - kphi[x]).square().matrix());
        total += mu[x] * row;
    }
    return total;
}

double conditional_variance_dual(const FeynmanKacModel& model, const McKeanSpec& spec,
                                 const Vector& mu, int p, const Vector& phi)
{
    if (p == 0)
    {
        const double mean = model.eta0.dot(phi);
        return model.eta0.dot(phi.cwiseProduct(phi)) - mean * mean;
    }
    const Vector phi_mu = step_phi(model, mu, p - 1);
    const Matrix k = mckean_kernel_from_phi(model, spec, phi_mu, p - 1);
    const Vector kphi = k * phi;
    return phi_mu.dot(phi.cwiseProduct(phi)) - mu.dot(kphi.cwiseProduct(kphi));
}

VarianceTerms increasing_process_limit(const FeynmanKacModel& model, const McKeanSpec& spec,
                                       const FlowAnalytics& flow, const std::vector<Vector>& phi)
{
    VarianceTerms out;
    out.delta_c.reserve(phi.size());
    for (std::size_t p = 0; p < phi.size(); ++p)
    {
        const int step = static_cast<int>(p);
        const Vector& mu = step == 0 ? model.eta0 : flow.eta(step - 1);
        const double direct = conditional_variance(model, spec, mu, step, phi[p]);
        const double dual = conditional_variance_dual(model, spec, mu, step, phi[p]);
        out.dual_form_gap = std::max(out.dual_form_gap, std::abs(direct - dual));
        out.delta_c.push_back(direct);
        out.sigma_sq += direct;
    }
    return out;
}

VarianceTerms limiting_variance(const FeynmanKacModel& model, const McKeanSpec& spec,
                                FlowAnalytics& flow)
{
    if (flow.target < 0)
        throw InvalidArgument("limiting_variance needs attach_function first");
    validate_spec(model, spec);
    VarianceTerms terms = increasing_process_limit(model, spec, flow, flow.fpn);
    flow.delta_c = terms.delta_c;
    flow.sigma_sq = terms.sigma_sq;
    return terms;
}

double concentration_b(const FlowAnalytics& flow, int n)
{
    double total = 0.0;
    for (int q = 0; q <= n; ++q)
        total += flow.ratio(q, n) * flow.beta(q, n);
    return 2.0 * total;
}

double a3_bound(const FlowAnalytics& flow, int n, double gamma)
{
    double sup = 0.0;
    for (int q = std::max(n - 1, 0); q <= n; ++q)
        sup = std::max(sup, concentration_b(flow, q) / 2.0);
    return 4.0 * std::sqrt(2.0) * (1.0 + gamma) * sup;
}

FlowAnalytics analyze(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const TestFunction& f, int n)
{
    validate_spec(model, spec);
    FlowAnalytics flow = exact_flow(model);
    compute_semigroups(model, flow);
    attach_function(model, flow, f, n);
    limiting_variance(model, spec, flow);
    return flow;
}

} // namespace fkbench
