#include "qsdlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsdlab/errors.hpp"

namespace qsdlab {

Grid1D::Grid1D(double a_, double b_, std::size_t n_) : a(a_), b(b_), n(n_) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw_input("grid needs finite a < b");
  if (n < 16) throw_input("grid needs at least 16 interior nodes");
}

std::vector<double> Tridiagonal::apply(const std::vector<double>& x) const {
  const std::size_t n = size();
  if (x.size() != n) throw_input("tridiagonal apply: size mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

Tridiagonal Tridiagonal::transpose() const {
  const std::size_t n = size();
  Tridiagonal t{std::vector<double>(n, 0.0), diag, std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    t.upper[i] = lower[i + 1];
    t.lower[i + 1] = upper[i];
  }
  return t;
}

Tridiagonal Tridiagonal::scaled(double s) const {
  Tridiagonal t = *this;
  for (auto* v : {&t.lower, &t.diag, &t.upper})
    for (double& x : *v) x *= s;
  return t;
}

std::vector<double> thomas_solve(const Tridiagonal& m, const std::vector<double>& rhs) {
  const std::size_t n = m.size();
  if (rhs.size() != n || n == 0) throw_input("thomas_solve: size mismatch");
  std::vector<double> c(n), d(n);
  double pivot = m.diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) pivot = m.diag[i] - m.lower[i] * c[i - 1];
    if (std::abs(pivot) < 1e-300) throw_numerical("thomas_solve: vanishing pivot");
    c[i] = (i + 1 < n) ? m.upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - (i > 0 ? m.lower[i] * d[i - 1] : 0.0)) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

namespace {

std::vector<double> nodal_force(const Grid1D& grid, const ForceField& field) {
  std::vector<double> f(grid.n);
  double q[1];
  double out[1];
  for (std::size_t i = 0; i < grid.n; ++i) {
    q[0] = grid.node(i);
    field.force(q, out);
    f[i] = out[0];
  }
  return f;
}

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw_input("beta must be positive and finite");
}

}  // namespace

Tridiagonal build_fp_matrix(const Grid1D& grid, const ForceField& field, double beta) {
  check_beta(beta);
  const std::size_t n = grid.n;
  const double h = grid.h();
  const double diff = 1.0 / (beta * h * h);
  const std::vector<double> f = nodal_force(grid, field);
  Tridiagonal a{std::vector<double>(n, 0.0), std::vector<double>(n, -2.0 * diff),
                std::vector<double>(n, 0.0)};
  // -(F psi)' at node i by (F_{i+1} psi_{i+1} - F_{i-1} psi_{i-1}) / 2h.
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) a.lower[i] = diff + f[i - 1] / (2.0 * h);
    if (i + 1 < n) a.upper[i] = diff - f[i + 1] / (2.0 * h);
  }
  return a;
}

Tridiagonal build_generator_matrix(const Grid1D& grid, const ForceField& field, double beta) {
  check_beta(beta);
  const std::size_t n = grid.n;
  const double h = grid.h();
  const double diff = 1.0 / (beta * h * h);
  const std::vector<double> f = nodal_force(grid, field);
  Tridiagonal l{std::vector<double>(n, 0.0), std::vector<double>(n, -2.0 * diff),
                std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) l.lower[i] = diff - f[i] / (2.0 * h);
    if (i + 1 < n) l.upper[i] = diff + f[i] / (2.0 * h);
  }
  return l;
}

std::vector<double> EigenPair::nodes() const {
  std::vector<double> x(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) x[i] = grid.node(i);
  return x;
}

GridDensity EigenPair::density() const {
  std::vector<double> x(grid.n + 2), f(grid.n + 2, 0.0);
  x.front() = grid.a;
  x.back() = grid.b;
  for (std::size_t i = 0; i < grid.n; ++i) {
    x[i + 1] = grid.node(i);
    f[i + 1] = psi[i];
  }
  return GridDensity(std::move(x), std::move(f));
}

namespace {

double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double residual_of(const Tridiagonal& a, const std::vector<double>& v, double lambda) {
  std::vector<double> r = a.apply(v);
  for (std::size_t i = 0; i < v.size(); ++i) r[i] += lambda * v[i];
  return norm_inf(r);
}

}  // namespace

EigenPair principal_eigenpair(const Tridiagonal& a, const Grid1D& grid, double tol) {
  const std::size_t n = a.size();
  if (n != grid.n) throw_input("principal_eigenpair: matrix and grid sizes differ");
  if (!(tol > 0.0)) throw_input("principal_eigenpair: tol must be positive");
  constexpr std::size_t kMaxIterations = 10000;
  constexpr double kResidualTol = 1e-8;

  const Tridiagonal neg = a.scaled(-1.0);
  std::vector<double> x(n, 1.0);
  double scale = std::sqrt(dot(x, x));
  for (double& v : x) v /= scale;
  double lambda = 0.0;
  bool have_lambda = false;
  EigenPair out;
  out.grid = grid;
  for (std::size_t it = 1; it <= kMaxIterations; ++it) {
    std::vector<double> y = thomas_solve(neg, x);
    const double next = dot(x, x) / dot(x, y);
    scale = std::sqrt(dot(y, y));
    if (!(scale > 0.0) || !std::isfinite(scale)) throw_numerical("inverse iteration broke down");
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / scale;
    const bool settled = have_lambda && std::abs(next - lambda) < tol * std::max(1.0, std::abs(next));
    lambda = next;
    have_lambda = true;
    if (!settled) continue;
    // Least-squares eigenvalue for the current vector.
    const std::vector<double> ax = a.apply(x);
    const double ls = -dot(x, ax) / dot(x, x);
    if (residual_of(a, x, ls) <= kResidualTol * norm_inf(x)) {
      lambda = ls;
      out.iterations = it;
      break;
    }
  }
  if (out.iterations == 0) {
    std::ostringstream msg;
    msg << "inverse iteration did not converge in " << kMaxIterations << " iterations";
    throw_numerical(msg.str());
  }

  double sum = 0.0;
  for (double v : x) sum += v;
  if (sum < 0.0)
    for (double& v : x) v = -v;
  const double peak = norm_inf(x);
  for (double& v : x) {
    if (v < -1e-12 * peak) throw_numerical("principal eigenvector changes sign");
    v = std::max(v, 0.0);
  }
  double mass = 0.0;
  for (double v : x) mass += v;
  mass *= grid.h();
  for (double& v : x) v /= mass;
  out.lambda0 = lambda;
  out.residual = residual_of(a, x, lambda);
  out.psi = std::move(x);
  return out;
}

EigenPair oracle_qsd(const ForceField& field, double beta, const Interval1D& interval,
                     std::size_t n, double tol) {
  const Grid1D grid(interval.a, interval.b, n);
  return principal_eigenpair(build_fp_matrix(grid, field, beta), grid, tol);
}

}  // namespace qsdlab
