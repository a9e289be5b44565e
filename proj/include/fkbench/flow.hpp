#pragma once

#include "fkbench/model.hpp"

#include <vector>

namespace fkbench {

/// Exact limiting objects of a Feynman-Kac model.
///
/// The flow part (etas, log_gamma1) is filled by exact_flow(). Semigroup
/// tables are indexed [p][n] and only meaningful for p <= n; they are filled
/// by compute_semigroups(). fpn and the variance terms refer to one target
/// time and one test function, set by attach_function() and
/// limiting_variance().
struct FlowAnalytics
{
    std::vector<Vector> etas;
    std::vector<double> log_gamma1;

    // Normalized semigroup Qbar_{p,n}, a d_p x d_n matrix.
    std::vector<std::vector<Matrix>> qbar;
    // Dobrushin coefficient of P_{p,n} and ratio sup Q_{p,n}1 / inf Q_{p,n}1.
    std::vector<std::vector<double>> betas;
    std::vector<std::vector<double>> ratios;
    // b(n) = 2 sum_{q<=n} r_{q,n} beta(P_{q,n}).
    std::vector<double> b_const;

    int target = -1;
    std::vector<Vector> fpn;

    std::vector<double> delta_c;
    double sigma_sq = 0.0;

    int horizon() const { return static_cast<int>(etas.size()) - 1; }
    const Vector& eta(int n) const { return etas.at(static_cast<std::size_t>(n)); }
    const Matrix& semigroup(int p, int n) const
    {
        return qbar.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(n));
    }
    double beta(int p, int n) const
    {
        return betas.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(n));
    }
    double ratio(int p, int n) const
    {
        return ratios.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(n));
    }
    const Vector& f_pn(int p) const { return fpn.at(static_cast<std::size_t>(p)); }
};

/// Runs the nonlinear flow eta_{n+1} = Phi_{n+1}(eta_n) and accumulates
/// log gamma_n(1) in the log domain. Validates the model first.
FlowAnalytics exact_flow(const FeynmanKacModel& model);

/// One-step normalized operator Qbar_{q-1,q} = G_{q-1} M_q / eta_{q-1}(G_{q-1}).
Matrix normalized_step(const FeynmanKacModel& model, const FlowAnalytics& flow, int q);

/// Fills qbar, betas, ratios and b_const for every pair p <= n.
void compute_semigroups(const FeynmanKacModel& model, FlowAnalytics& flow);

/// Sets target = n and fpn[p] = Qbar_{p,n}(f_n - eta_n(f_n)) for p <= n.
void attach_function(const FeynmanKacModel& model, FlowAnalytics& flow, const TestFunction& f,
                     int n);

/// Dobrushin coefficient: max over row pairs of half the L1 distance.
/// Rows are normalized to probabilities first.
double dobrushin(const Matrix& kernel);

/// One conditional-variance term of the increasing process.
///
/// For p = 0 this is Var_{eta0}(phi) and mu is ignored. For p >= 1 it is
/// mu K_{p,mu}(phi - K_{p,mu} phi)^2 with mu a law on E_{p-1}.
double conditional_variance(const FeynmanKacModel& model, const McKeanSpec& spec,
                            const Vector& mu, int p, const Vector& phi);

/// Same term through Phi_p(mu)(phi^2) - mu((K_{p,mu} phi)^2).
double conditional_variance_dual(const FeynmanKacModel& model, const McKeanSpec& spec,
                                 const Vector& mu, int p, const Vector& phi);

struct VarianceTerms
{
    std::vector<double> delta_c;
    double sigma_sq = 0.0;
    // Largest gap between the two algebraic forms of a term.
    double dual_form_gap = 0.0;
};

/// Conditional-variance increments along the flow for an arbitrary function
/// family phi_0..phi_n, evaluated with both forms.
VarianceTerms increasing_process_limit(const FeynmanKacModel& model, const McKeanSpec& spec,
                                       const FlowAnalytics& flow, const std::vector<Vector>& phi);

/// sigma_n^2(f): the increasing process of the family f_{p,n}. Requires
/// attach_function(); stores delta_c and sigma_sq into flow.
VarianceTerms limiting_variance(const FeynmanKacModel& model, const McKeanSpec& spec,
                                FlowAnalytics& flow);

/// b(n) = 2 sum_{q<=n} r_{q,n} beta(P_{q,n}).
double concentration_b(const FlowAnalytics& flow, int n);

/// 4 sqrt(2) (1 + gamma) max over q in {n-1, n} of sum_{p<=q} r_{p,q} beta(P_{p,q}).
double a3_bound(const FlowAnalytics& flow, int n, double gamma);

/// Convenience: flow, semigroups, f_{p,n} and sigma_n^2 in one call.
FlowAnalytics analyze(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const TestFunction& f, int n);

} // namespace fkbench
