#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qsdlab {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments summarize(std::span<const double> values);

/// Strided view summary: values[offset], values[offset + stride], ...
Moments summarize_strided(std::span<const double> values, std::size_t offset, std::size_t stride);

double correlation(std::span<const double> x, std::span<const double> y);

/// Mean and standard error of batch values (sample sd / sqrt(n)).
struct BatchEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};
BatchEstimate batch_estimate(std::span<const double> batch_values);

/// sup_x |F_emp(x) - (1 - e^{-rate x})|.
double ks_exponential(std::vector<double> samples, double rate);

/// Density tabulated on increasing nodes; the CDF is the running trapezoid
/// integral, linear between nodes.
class GridDensity {
 public:
  GridDensity(std::vector<double> nodes, std::vector<double> values);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  /// CDF at each node, normalised to end at exactly 1.
  const std::vector<double>& cdf_nodes() const { return cdf_; }
  double mass() const { return mass_; }

  double cdf(double x) const;
  /// Inverse-CDF draw for u in (0, 1).
  double quantile(double u) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> cdf_;
  double mass_ = 0.0;
};

/// Gaussian N(mean, variance) tabulated on mean +- 10 sd.
GridDensity gaussian_grid_density(double mean, double variance, std::size_t nodes = 20001);

/// Integral of |F_emp - F_grid| over the real line. The grid density must
/// integrate to 1 within 1e-6.
double wasserstein1_1d(std::span<const double> samples, const GridDensity& density);

/// Integral of |F_a - F_b| between two empirical distributions.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

}  // namespace qsdlab
