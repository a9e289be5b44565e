#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fkbench {

/// Standard normal distribution function through erfc, accurate to a few
/// ulps across the real line (no cancellation in either tail).
double normal_cdf(double x);

/// Sorted sample backing an empirical distribution function.
class EcdfSample
{
  public:
    explicit EcdfSample(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    /// Fraction of the sample <= x.
    double operator()(double x) const;

  private:
    std::vector<double> values_;
};

/// sup_x |F_R(x) - Phi(x / sigma)|, exact over the jump points.
double kolmogorov_distance(const EcdfSample& sample, double sigma);

/// Same supremum for a sample already mapped through the reference c.d.f.
/// (values in [0, 1], sorted in place).
double kolmogorov_distance_uniform(std::vector<double>& cdf_values);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);
double standard_error(std::span<const double> values);

} // namespace fkbench
