#include "qsdlab/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsdlab/errors.hpp"

namespace qsdlab {

Moments summarize_strided(std::span<const double> values, std::size_t offset, std::size_t stride) {
  Moments m;
  if (stride == 0) throw_input("summarize: stride must be positive");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = offset; i < values.size(); i += stride) {
    sum += values[i];
    ++n;
  }
  if (n == 0) throw_input("summarize: no values");
  m.n = n;
  m.mean = sum / static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = offset; i < values.size(); i += stride) {
    const double d = values[i] - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double nd = static_cast<double>(n);
  m.variance = n > 1 ? m2 / (nd - 1.0) : 0.0;
  const double pop2 = m2 / nd;
  if (pop2 > 0.0) {
    m.skewness = (m3 / nd) / std::pow(pop2, 1.5);
    m.excess_kurtosis = (m4 / nd) / (pop2 * pop2) - 3.0;
  }
  return m;
}

Moments summarize(std::span<const double> values) { return summarize_strided(values, 0, 1); }

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw_input("correlation: need two equal-length series");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

BatchEstimate batch_estimate(std::span<const double> batch_values) {
  BatchEstimate b;
  if (batch_values.empty()) return b;
  const Moments m = summarize(batch_values);
  b.mean = m.mean;
  b.stderr_ = m.n > 1 ? std::sqrt(m.variance / static_cast<double>(m.n)) : 0.0;
  return b;
}

double ks_exponential(std::vector<double> samples, double rate) {
  if (samples.empty()) throw_input("ks_exponential: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = -std::expm1(-rate * samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// ---------------------------------------------------------------------------

GridDensity::GridDensity(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.size() < 2 || nodes_.size() != values_.size())
    throw_input("grid density needs at least two nodes and matching values");
  cdf_.assign(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(values_[i] >= 0.0)) throw_input("grid density values must be nonnegative");
    if (i > 0) {
      const double h = nodes_[i] - nodes_[i - 1];
      if (!(h > 0.0)) throw_input("grid density nodes must be strictly increasing");
      cdf_[i] = cdf_[i - 1] + 0.5 * h * (values_[i] + values_[i - 1]);
    }
  }
  mass_ = cdf_.back();
  if (std::abs(mass_ - 1.0) > 1e-6) throw_input("grid density must integrate to 1 within 1e-6");
  for (double& c : cdf_) c /= mass_;
}

double GridDensity::cdf(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return 1.0;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
  const double w = (x - nodes_[i - 1]) / (nodes_[i] - nodes_[i - 1]);
  return cdf_[i - 1] + w * (cdf_[i] - cdf_[i - 1]);
}

double GridDensity::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw_input("quantile level must lie in (0, 1)");
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  if (i == 0) i = 1;
  if (i >= cdf_.size()) i = cdf_.size() - 1;
  const double span = cdf_[i] - cdf_[i - 1];
  const double w = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.5;
  return nodes_[i - 1] + w * (nodes_[i] - nodes_[i - 1]);
}

GridDensity gaussian_grid_density(double mean, double variance, std::size_t nodes) {
  if (!(variance > 0.0)) throw_input("gaussian density needs positive variance");
  const double sd = std::sqrt(variance);
  std::vector<double> x(nodes), f(nodes);
  const double lo = mean - 10.0 * sd;
  const double h = 20.0 * sd / static_cast<double>(nodes - 1);
  const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < nodes; ++i) {
    x[i] = lo + h * static_cast<double>(i);
    const double z = (x[i] - mean) / sd;
    f[i] = norm * std::exp(-0.5 * z * z);
  }
  return GridDensity(std::move(x), std::move(f));
}

namespace {

// Integral over an interval of length len of |d(x)| with d linear from d0 to d1.
double abs_linear_integral(double d0, double d1, double len) {
  if (d0 * d1 >= 0.0) return 0.5 * (std::abs(d0) + std::abs(d1)) * len;
  return len * (d0 * d0 + d1 * d1) / (2.0 * (std::abs(d0) + std::abs(d1)));
}

}  // namespace

double wasserstein1_1d(std::span<const double> samples, const GridDensity& density) {
  if (samples.empty()) throw_input("wasserstein1_1d: empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const auto& x = density.nodes();
  const double n = static_cast<double>(s.size());

  // Sweep the merged breakpoints; F_emp is constant between them and the grid
  // CDF is linear.
  std::size_t i = 0;  // samples consumed (F_emp = i / n)
  std::size_t j = 0;  // next grid node
  double pos = std::min(s.front(), x.front());
  double total = 0.0;
  while (i < s.size() || j < x.size()) {
    double next;
    if (j < x.size() && (i >= s.size() || x[j] <= s[i]))
      next = x[j];
    else
      next = s[i];
    if (next > pos) {
      const double fe = static_cast<double>(i) / n;
      total += abs_linear_integral(fe - density.cdf(pos), fe - density.cdf(next), next - pos);
      pos = next;
    }
    if (j < x.size() && x[j] == next) ++j;
    while (i < s.size() && s[i] == next) ++i;
  }
  return total;
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw_input("wasserstein1_1d: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double pos = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double next;
    if (j < sb.size() && (i >= sa.size() || sb[j] <= sa[i]))
      next = sb[j];
    else
      next = sa[i];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - pos);
    pos = next;
    while (i < sa.size() && sa[i] == next) ++i;
    while (j < sb.size() && sb[j] == next) ++j;
  }
  return total;
}

}  // namespace qsdlab
