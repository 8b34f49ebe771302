#include "qsdlab/kinetic_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace detail {

namespace {

// Horner evaluation of c[0] + c[1] x + ... + c[6] x^6.
double poly6(const double (&c)[7], double x) {
  double acc = c[6];
  for (int i = 5; i >= 0; --i) acc = acc * x + c[i];
  return acc;
}

// Below this magnitude the closed forms are evaluated by summing the
// exponential-series remainder; above it the textbook expressions are exact
// to a few ulps.
constexpr double kSeriesCutoff = 1.0;

// sum_{k>=3} (-1)^k (4 - 2^k) rho^{k-3} / k!  ==  [2 rho - 3 + 4 e^{-rho} - e^{-2 rho}] / rho^3
double phi2_bracket_series(double rho) {
  double sum = 0.0;
  double power = 1.0;  // rho^{k-3}
  double two_k = 8.0;  // 2^k
  double fact = 6.0;   // k!
  for (int k = 3; k < 60; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double term = sign * (4.0 - two_k) * power / fact;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    power *= rho;
    two_k *= 2.0;
    fact *= static_cast<double>(k + 1);
  }
  return sum;
}

// sum_{k>=3} (-1)^k (2 - k) rho^{k-3} / k!  ==  [-2 + rho + (2 + rho) e^{-rho}] / rho^3
double phi_bracket_series(double rho) {
  double sum = 0.0;
  double power = 1.0;
  double fact = 6.0;
  for (int k = 3; k < 60; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double term = sign * (2.0 - k) * power / fact;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    power *= rho;
    fact *= static_cast<double>(k + 1);
  }
  return sum;
}

}  // namespace

double phi1_taylor(double rho) {
  static constexpr double c[7] = {1.0,         -1.0 / 2.0,   1.0 / 6.0,   -1.0 / 24.0,
                                  1.0 / 120.0, -1.0 / 720.0, 1.0 / 5040.0};
  return poly6(c, rho);
}

double phi2_taylor(double rho) {
  static constexpr double c[7] = {1.0,          -3.0 / 4.0,   7.0 / 20.0,     -1.0 / 8.0,
                                  31.0 / 840.0, -3.0 / 320.0, 127.0 / 60480.0};
  return poly6(c, rho);
}

double phi_fn_taylor(double rho) {
  static constexpr double c[7] = {1.0,          -1.0,           17.0 / 30.0,     -7.0 / 30.0,
                                  43.0 / 560.0, -107.0 / 5040.0, 769.0 / 151200.0};
  return poly6(c, rho);
}

double phi1_closed(double rho) { return -std::expm1(-rho) / rho; }

double phi2_closed(double rho) {
  if (std::abs(rho) < kSeriesCutoff) return 1.5 * phi2_bracket_series(rho);
  const double bracket = 2.0 * rho - 3.0 + 4.0 * std::exp(-rho) - std::exp(-2.0 * rho);
  return 1.5 * bracket / (rho * rho * rho);
}

double phi_fn_closed(double rho) {
  double bracket;
  if (std::abs(rho) < kSeriesCutoff) {
    bracket = phi_bracket_series(rho);
  } else {
    bracket = (-2.0 + rho + (2.0 + rho) * std::exp(-rho)) / (rho * rho * rho);
  }
  return 6.0 * phi1_closed(rho) * bracket;
}

}  // namespace detail

double phi1(double rho) {
  return std::abs(rho) < detail::kTaylorCutoff ? detail::phi1_taylor(rho) : detail::phi1_closed(rho);
}

double phi2(double rho) {
  return std::abs(rho) < detail::kTaylorCutoff ? detail::phi2_taylor(rho) : detail::phi2_closed(rho);
}

double phi_fn(double rho) {
  return std::abs(rho) < detail::kTaylorCutoff ? detail::phi_fn_taylor(rho)
                                               : detail::phi_fn_closed(rho);
}

// ---------------------------------------------------------------------------

namespace {

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw_input("kernel time t must be positive and finite");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw_input("kernel alpha must lie in (0, 1]");
}

struct Coefficients {
  double c_qq, c_qp, c_pp, block_det;
};

Coefficients coefficients(double t, const PhysParams& params, double alpha) {
  const double s2 = params.sigma2() / alpha;
  const double rho = params.gamma() * t;
  const double f1 = phi1(rho);
  Coefficients c{};
  c.c_qq = s2 * t * t * t * phi2(rho) / 3.0;
  c.c_qp = s2 * t * t * f1 * f1 / 2.0;
  c.c_pp = s2 * t * phi1(2.0 * rho);
  const double s2t2 = s2 * t * t;
  c.block_det = s2t2 * s2t2 * phi_fn(rho) / 12.0;
  return c;
}

}  // namespace

KernelMoments kernel_moments(double t, const PhysParams& params, double alpha, const State& x0) {
  check_time(t);
  check_alpha(alpha);
  const double rho = params.gamma() * t;
  const double drift = t * phi1(rho);
  const double decay = std::exp(-rho);
  KernelMoments m;
  m.alpha = alpha;
  m.m_q.resize(x0.dim());
  m.m_p.resize(x0.dim());
  for (std::size_t i = 0; i < x0.dim(); ++i) {
    m.m_q[i] = x0.q[i] + drift * x0.p[i];
    m.m_p[i] = decay * x0.p[i];
  }
  const Coefficients c = coefficients(t, params, alpha);
  m.c_qq = c.c_qq;
  m.c_qp = c.c_qp;
  m.c_pp = c.c_pp;
  m.block_det = c.block_det;
  return m;
}

CovDeterminant det_cov(double t, const PhysParams& params, double alpha, std::size_t dim) {
  check_time(t);
  check_alpha(alpha);
  const Coefficients c = coefficients(t, params, alpha);
  CovDeterminant d{};
  d.block = c.c_qq * c.c_pp - c.c_qp * c.c_qp;
  d.block_phi = c.block_det;
  d.full = std::pow(c.block_det, static_cast<double>(dim));
  return d;
}

KineticFlow::KineticFlow(double t, const PhysParams& params, double alpha, double noise_scale)
    : t_(t) {
  check_time(t);
  check_alpha(alpha);
  const double rho = params.gamma() * t;
  drift_ = t * phi1(rho);
  decay_ = std::exp(-rho);
  const Coefficients c = coefficients(t, params, alpha);
  const double direct_det = c.c_qq * c.c_pp - c.c_qp * c.c_qp;
  if (direct_det < -1e-14) {
    std::ostringstream msg;
    msg << "kinetic kernel covariance is indefinite at t=" << t << " (block det " << direct_det
        << ")";
    throw_numerical(msg.str());
  }
  l11_ = std::sqrt(c.c_qq);
  l21_ = c.c_qp / l11_;
  l22_ = std::sqrt(std::max(0.0, c.block_det / c.c_qq));
  l11_ *= noise_scale;
  l21_ *= noise_scale;
  l22_ *= noise_scale;
}

void KineticFlow::apply(std::span<double> q, std::span<double> p, RandomStream& rng) const {
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double q0 = q[i];
    const double p0 = p[i];
    q[i] = q0 + drift_ * p0 + l11_ * z1;
    p[i] = decay_ * p0 + l21_ * z1 + l22_ * z2;
  }
}

State kernel_sample(double t, const PhysParams& params, double alpha, const State& x0,
                    RandomStream& rng) {
  const KineticFlow flow(t, params, alpha);
  State x = x0;
  flow.apply(x.q, x.p, rng);
  return x;
}

double kernel_logdensity(double t, const PhysParams& params, double alpha, const State& x0,
                         const State& x1) {
  if (x0.dim() != x1.dim()) throw_input("kernel_logdensity: state dimensions differ");
  const KernelMoments m = kernel_moments(t, params, alpha, x0);
  const double det = m.block_det;
  double logp = 0.0;
  for (std::size_t i = 0; i < x0.dim(); ++i) {
    const double dq = x1.q[i] - m.m_q[i];
    const double dp = x1.p[i] - m.m_p[i];
    const double quad = (m.c_pp * dq * dq - 2.0 * m.c_qp * dq * dp + m.c_qq * dp * dp) / det;
    logp += -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
  }
  return logp;
}

// ---------------------------------------------------------------------------

UpperBoundParams::UpperBoundParams(double alpha_, double c_alpha_, double f_sup_)
    : alpha(alpha_), c_alpha(c_alpha_), f_sup(f_sup_) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw_input("upper-bound alpha must lie in (0, 1)");
  if (!(c_alpha > 0.0)) throw_input("c_alpha must be positive");
  if (!(f_sup >= 0.0)) throw_input("f_sup must be nonnegative");
}

namespace {

// sum_{j>=0} x^j / Gamma((j+1)/2), x >= 0.
double gamma_series(double x) {
  constexpr int kMaxTerms = 500;
  double sum = 1.0 / std::sqrt(std::numbers::pi);
  if (x == 0.0) return sum;
  const double log_x = std::log(x);
  for (int j = 1; j <= kMaxTerms; ++j) {
    const double term = std::exp(j * log_x - std::lgamma(0.5 * (j + 1)));
    sum += term;
    if (term < 1e-14 * sum) return sum;
  }
  std::ostringstream msg;
  msg << "upper-bound series did not converge within " << kMaxTerms << " terms (x=" << x << ")";
  throw_numerical(msg.str());
}

}  // namespace

double ub_series_prefactor(double t, const PhysParams& params, const UpperBoundParams& ubp,
                           std::size_t dim) {
  check_time(t);
  const double x =
      ubp.f_sup * ubp.c_alpha * std::sqrt(std::numbers::pi * t) / std::sqrt(params.sigma2());
  return gamma_series(x) / std::pow(ubp.alpha, static_cast<double>(dim));
}

double ub_series_prefactor_rescaled(double t, double beta, const UpperBoundParams& ubp,
                                    std::size_t dim) {
  check_time(t);
  if (!(beta > 0.0)) throw_input("beta must be positive");
  const double x = ubp.f_sup * ubp.c_alpha * std::sqrt(std::numbers::pi * t) / std::sqrt(2.0 / beta);
  return gamma_series(x) / std::pow(ubp.alpha, static_cast<double>(dim));
}

}  // namespace qsdlab
