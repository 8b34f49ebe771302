#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qsdlab/model.hpp"
#include "qsdlab/random.hpp"

namespace qsdlab {

/// (1 - e^{-rho}) / rho, with value 1 at rho = 0.
double phi1(double rho);
/// 3 / (2 rho^3) [2 rho - 3 + 4 e^{-rho} - e^{-2 rho}], with value 1 at rho = 0.
double phi2(double rho);
/// 6 (1 - e^{-rho}) [-2 + rho + (2 + rho) e^{-rho}] / rho^4, with value 1 at 0.
/// Equals 4 phi2(rho) phi1(2 rho) - 3 phi1(rho)^4.
double phi_fn(double rho);

namespace detail {
// Individual evaluation branches, exposed so tests can compare them.
// Taylor branches are degree-6 polynomials used for |rho| < kTaylorCutoff.
inline constexpr double kTaylorCutoff = 1e-4;
double phi1_taylor(double rho);
double phi2_taylor(double rho);
double phi_fn_taylor(double rho);
// Closed forms rewritten through exponential-series remainders so that no
// leading terms cancel; valid for any finite rho != 0.
double phi1_closed(double rho);
double phi2_closed(double rho);
double phi_fn_closed(double rho);
}  // namespace detail

/// Mean and block-scalar covariance of the free kinetic OU law at time t
/// started from x0, with noise amplified by 1/sqrt(alpha).
struct KernelMoments {
  std::vector<double> m_q;
  std::vector<double> m_p;
  double c_qq = 0.0;
  double c_qp = 0.0;
  double c_pp = 0.0;
  double alpha = 1.0;

  /// c_qq c_pp - c_qp^2 of one (q_i, p_i) block, via the phi_fn closed form.
  double block_det = 0.0;
};

KernelMoments kernel_moments(double t, const PhysParams& params, double alpha, const State& x0);

struct CovDeterminant {
  double block;        // c_qq c_pp - c_qp^2 by direct subtraction
  double block_phi;    // sigma^4 t^4 phi(gamma t) / (12 alpha^2)
  double full;         // block_phi^d, the determinant of the 2d x 2d covariance
};

CovDeterminant det_cov(double t, const PhysParams& params, double alpha, std::size_t dim);

/// Exact transition map of dq = p dt, dp = -gamma p dt + sqrt(2 gamma / (beta alpha)) dB
/// over a fixed time t, precomputed for repeated sampling.
class KineticFlow {
 public:
  KineticFlow(double t, const PhysParams& params, double alpha, double noise_scale = 1.0);

  /// Advances (q, p) in place, two normals per coordinate.
  void apply(std::span<double> q, std::span<double> p, RandomStream& rng) const;

  double t() const { return t_; }

 private:
  double t_;
  double drift_;  // t phi1(gamma t)
  double decay_;  // e^{-gamma t}
  double l11_, l21_, l22_;
};

State kernel_sample(double t, const PhysParams& params, double alpha, const State& x0,
                    RandomStream& rng);

double kernel_logdensity(double t, const PhysParams& params, double alpha, const State& x0,
                         const State& x1);

struct UpperBoundParams {
  double alpha;
  double c_alpha = 1.0;
  double f_sup = 0.0;

  UpperBoundParams(double alpha_, double c_alpha_, double f_sup_);
};

/// alpha^{-d} sum_j (f_sup c_alpha sqrt(pi t))^j / ((2 gamma / beta)^{j/2} Gamma((j+1)/2)),
/// the factor multiplying the Gaussian kernel density in the absorbed-density bound.
double ub_series_prefactor(double t, const PhysParams& params, const UpperBoundParams& ubp,
                           std::size_t dim);

/// Same series at physical time gamma t, written with the (2/beta)^{j/2}
/// denominator; it does not depend on gamma.
double ub_series_prefactor_rescaled(double t, double beta, const UpperBoundParams& ubp,
                                    std::size_t dim);

}  // namespace qsdlab
