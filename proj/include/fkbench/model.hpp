#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace fkbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance for identities that involve a bounded number of flops.
inline constexpr double kAlgebraicTol = 1e-12;
/// Tolerance for identities that go through accumulated matrix products.
inline constexpr double kProductTol = 1e-10;

/// Feynman-Kac model on finite state spaces E_0, ..., E_H.
///
/// kernels[n] is the Markov transition from E_n to E_{n+1} (so there are
/// `horizon` of them), potentials[n] is the positive weight on E_n (there are
/// `horizon + 1` of them) and eta0 is the initial law on E_0.
struct FeynmanKacModel
{
    int horizon = 0;
    std::vector<int> dims;
    std::vector<Matrix> kernels;
    std::vector<Vector> potentials;
    Vector eta0;

    int dim(int n) const { return dims.at(static_cast<std::size_t>(n)); }
    const Matrix& kernel_into(int n) const { return kernels.at(static_cast<std::size_t>(n - 1)); }
    const Vector& potential(int n) const { return potentials.at(static_cast<std::size_t>(n)); }
};

/// Constant selection weights of the epsilon-McKean kernels, one per step:
/// epsilons[n] drives the transition from E_n to E_{n+1}.
struct McKeanSpec
{
    std::vector<double> epsilons;

    static McKeanSpec constant(int horizon, double eps)
    {
        return McKeanSpec{std::vector<double>(static_cast<std::size_t>(horizon), eps)};
    }
};

/// A bounded function per time index; values[n] lives on E_n.
struct TestFunction
{
    std::vector<Vector> values;

    const Vector& at(int n) const { return values.at(static_cast<std::size_t>(n)); }
};

/// max - min of a vector.
double oscillation(const Vector& f);

/// Checks every model invariant and returns the oscillation ratios
/// r_n = max G_n / min G_n, n = 0..horizon.
std::vector<double> validate_model(const FeynmanKacModel& model);

/// Throws EpsilonOutOfRange unless eps_n * G_n(x) lies in [0, 1] everywhere.
void validate_spec(const FeynmanKacModel& model, const McKeanSpec& spec);

/// Throws ShapeMismatch or a non-finite error unless f covers times 0..n.
void validate_function(const FeynmanKacModel& model, const TestFunction& f, int n);

/// Reweights mu by G_n and renormalizes.
Vector boltzmann_gibbs(const FeynmanKacModel& model, const Vector& mu, int n);

/// One step of the nonlinear flow: the Boltzmann-Gibbs transform at time n
/// followed by the move M_{n+1}. Returns a law on E_{n+1}.
Vector step_phi(const FeynmanKacModel& model, const Vector& mu, int n);

/// Row-stochastic matrix of the epsilon-McKean kernel K_{n+1,mu}:
/// row x is eps G_n(x) M_{n+1}(x,.) + (1 - eps G_n(x)) Phi_{n+1}(mu).
Matrix mckean_kernel(const FeynmanKacModel& model, const McKeanSpec& spec, const Vector& mu,
                     int n);

/// Same kernel, reusing a precomputed Phi_{n+1}(mu).
Matrix mckean_kernel_from_phi(const FeynmanKacModel& model, const McKeanSpec& spec,
                              const Vector& phi, int n);

/// Max-norm of mu K_{n+1,mu} - Phi_{n+1}(mu).
double compatibility_residual(const FeynmanKacModel& model, const McKeanSpec& spec,
                              const Vector& mu, int n);

} // namespace fkbench
