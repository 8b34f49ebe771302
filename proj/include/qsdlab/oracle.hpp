#pragma once

#include <cstddef>
#include <vector>

#include "qsdlab/model.hpp"
#include "qsdlab/statistics.hpp"

namespace qsdlab {

/// n interior nodes a + (i + 1) h, i = 0..n-1, with h = (b - a) / (n + 1).
struct Grid1D {
  double a = -1.0;
  double b = 1.0;
  std::size_t n = 16;

  Grid1D() = default;
  Grid1D(double a_, double b_, std::size_t n_);

  double h() const { return (b - a) / static_cast<double>(n + 1); }
  double node(std::size_t i) const { return a + static_cast<double>(i + 1) * h(); }
};

/// Row i holds lower[i] at column i-1, diag[i] at i, upper[i] at i+1.
/// lower[0] and upper[n-1] are unused and kept at zero.
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  std::size_t size() const { return diag.size(); }
  std::vector<double> apply(const std::vector<double>& x) const;
  Tridiagonal transpose() const;
  Tridiagonal scaled(double s) const;
};

/// Solves M x = rhs by the Thomas recurrence. Throws NumericalError on a
/// vanishing pivot.
std::vector<double> thomas_solve(const Tridiagonal& m, const std::vector<double>& rhs);

/// Fokker-Planck operator psi -> beta^{-1} psi'' - (F psi)' with zero boundary
/// values, central differences on the interior nodes.
Tridiagonal build_fp_matrix(const Grid1D& grid, const ForceField& field, double beta);

/// Forward generator u -> beta^{-1} u'' + F u' with zero boundary values; the
/// transpose of build_fp_matrix on the same grid.
Tridiagonal build_generator_matrix(const Grid1D& grid, const ForceField& field, double beta);

struct EigenPair {
  double lambda0 = 0.0;
  std::vector<double> psi;  // interior nodes, unit trapezoid mass
  Grid1D grid;
  double residual = 0.0;  // ||A psi + lambda0 psi||_inf
  std::size_t iterations = 0;

  std::vector<double> nodes() const;
  /// Density on the closed grid including the zero boundary values.
  GridDensity density() const;
};

/// Principal pair of A (A psi = -lambda0 psi, lambda0 the smallest eigenvalue
/// of -A) by inverse iteration on -A with Thomas solves. Iterates until the
/// eigenvalue increment is below tol * max(1, lambda0) and the residual is
/// below 1e-8 ||psi||_inf.
EigenPair principal_eigenpair(const Tridiagonal& a, const Grid1D& grid, double tol = 1e-12);

EigenPair oracle_qsd(const ForceField& field, double beta, const Interval1D& interval,
                     std::size_t n = 4000, double tol = 1e-12);

}  // namespace qsdlab
