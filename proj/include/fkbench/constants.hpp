#pragma once

#include "fkbench/flow.hpp"
#include "fkbench/model.hpp"

#include <optional>
#include <vector>

namespace fkbench {

/// Burkholder-type moment constant d(p), p >= 1, with (m)_k read as the
/// falling factorial m! / (m - k)!. Even orders reproduce the Gaussian
/// moments: d(2) = 1, d(4) = 3, d(6) = 15.
double burkholder_d(int p);

/// Closed-form bounds available under the (m, r, rho) mixing hypothesis
/// M_{n,n+m}(x, A) >= rho M_{n,n+m}(y, A).
struct MixingBounds
{
    int m = 1;
    double r = 1.0;
    double rho = 1.0;
    double gamma = 1.0;

    double r_bound = 0.0;  // r^m / rho
    double b_bound = 0.0;  // 2 m r^{2m-1} / rho^3
    double a3_bound = 0.0; // 8 sqrt(2) m r^{2m-1} (1 + gamma) / rho^3
    // (1 - r^{m-1} rho^2)^{floor(lag / m)} for lag = 0..n; only reported when
    // the base lies in [0, 1).
    std::optional<std::vector<double>> beta_bounds;
};

MixingBounds mixing_bounds(int m, double r, double rho, int n, double gamma = 1.0);

/// m-step composition M_{n+1} ... M_{n+m}.
Matrix composed_kernel(const FeynmanKacModel& model, int n, int m);

/// Largest rho for which M_{n,n+m}(x,{z}) >= rho M_{n,n+m}(y,{z}) holds for
/// all n with n + m <= horizon. Returns 1 when no window fits.
double mixing_rho(const FeynmanKacModel& model, int m);

/// Throws HypothesisNotSatisfied if the (m, rho) minorization fails for some
/// window of the model. Singletons suffice on finite spaces.
void check_mixing(const FeynmanKacModel& model, int m, double rho);

struct MixingVerification
{
    MixingBounds bounds;
    double max_ratio = 0.0;  // max_n r_{n,n+m}
    double max_b = 0.0;      // max_n b(n)
    bool ratio_ok = false;
    bool b_ok = false;
};

/// Checks the hypothesis on the model, then compares the exact r_{n,n+m} and
/// b(n) tables against the closed forms. r is taken as max_n r_n.
MixingVerification verify_mixing(const FeynmanKacModel& model, const FlowAnalytics& flow, int m,
                                 double rho, double gamma = 1.0);

/// Total masses of the measures that witness condition (H) for the
/// constant-epsilon kernels.
struct McKeanGamma
{
    double gamma = 0.0;       // Gamma_{n,f}(1)
    double gamma_prime = 1.0; // Gamma'_{n,f}(1)
    double combined = 1.0;    // sup of both total masses
    double tilde = 2.0;       // combined + 1
};

McKeanGamma mckean_gamma(const McKeanSpec& spec);

struct HResidual
{
    double lhs = 0.0; // || K_{n+1,mu}(f) - K_{n+1,eta_n}(f) ||
    double rhs = 0.0; // | Phi_{n+1}(mu)(f - eta_{n+1}(f)) |
};

/// Evaluates both sides of condition (H) for the epsilon kernel at time n.
HResidual h_condition(const FeynmanKacModel& model, const McKeanSpec& spec,
                      const FlowAnalytics& flow, const Vector& mu, int n, const Vector& f);

} // namespace fkbench
