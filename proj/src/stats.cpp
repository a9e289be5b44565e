#include "fkbench/stats.hpp"

#include "fkbench/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fkbench {

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

EcdfSample::EcdfSample(std::vector<double> values) : values_(std::move(values))
{
    if (values_.empty())
        throw InvalidArgument("empirical distribution needs at least one value");
    std::sort(values_.begin(), values_.end());
}

double EcdfSample::operator()(double x) const
{
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double kolmogorov_distance(const EcdfSample& sample, double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DegenerateSigma("reference standard deviation must be positive");
    std::vector<double> cdf;
    cdf.reserve(sample.size());
    for (double x : sample.values())
        cdf.push_back(normal_cdf(x / sigma));
    return kolmogorov_distance_uniform(cdf);
}

double kolmogorov_distance_uniform(std::vector<double>& cdf_values)
{
    std::sort(cdf_values.begin(), cdf_values.end());
    const double r = static_cast<double>(cdf_values.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < cdf_values.size(); ++i)
    {
        const double above = static_cast<double>(i + 1) / r - cdf_values[i];
        const double below = cdf_values[i] - static_cast<double>(i) / r;
        worst = std::max({worst, above, below});
    }
    return worst;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument("least squares needs two or more paired points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0))
        throw InvalidArgument("least squares needs distinct abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw InvalidArgument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - t) + values[hi] * t;
}

double mean(std::span<const double> values)
{
    double total = 0.0;
    for (double v : values)
        total += v;
    return total / static_cast<double>(values.size());
}

double standard_error(std::span<const double> values)
{
    if (values.size() < 2)
        return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values)
        ss += (v - m) * (v - m);
    const double n = static_cast<double>(values.size());
    return std::sqrt(ss / (n - 1.0) / n);
}

} // namespace fkbench
