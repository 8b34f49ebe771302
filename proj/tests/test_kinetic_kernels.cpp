#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "qsdlab/errors.hpp"
#include "qsdlab/kinetic_kernels.hpp"
#include "qsdlab/statistics.hpp"

using namespace qsdlab;

namespace {

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

const PhysParams kUnit(1.0, 1.0);

}  // namespace

TEST_CASE("phi functions at reference points") {
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi2(0.0) == 1.0);
  CHECK(phi_fn(0.0) == 1.0);
  CHECK(rel_close(phi1(1.0), 0.6321205588285577, 1e-14));
  CHECK(rel_close(phi1(-1.0), 1.718281828459045, 1e-14));
  CHECK(rel_close(phi2(1.0), 0.5042737221737349, 1e-13));
  CHECK(std::abs(phi2(100.0) - 2.955e-4) <= 1e-8);
  CHECK(rel_close(phi_fn(1.0), 0.3930714898555873, 1e-13));
  CHECK(std::abs(phi_fn(1e6) * 1e18 - 6.0 * (1.0 - 2e-6)) <= 1e-4);
}

TEST_CASE("phi identity on the listed points and a log grid") {
  auto rhs = [](double rho) {
    const double f1 = phi1(rho);
    return 4.0 * phi2(rho) * phi1(2.0 * rho) - 3.0 * f1 * f1 * f1 * f1;
  };
  for (double rho : {0.01, 1.0, 10.0}) CHECK(rel_close(phi_fn(rho), rhs(rho), 1e-10));
  for (int i = 0; i < 1000; ++i) {
    const double rho = std::pow(10.0, -6.0 + 9.0 * i / 999.0);
    CHECK(std::abs(phi_fn(rho) - rhs(rho)) <= 1e-10 * (1.0 + std::abs(phi_fn(rho))));
  }
}

TEST_CASE("Taylor and closed branches agree near the cutoff") {
  for (double rho : {1e-8, 1e-6, 1e-4, -1e-6, -1e-4}) {
    CHECK(rel_close(detail::phi1_taylor(rho), detail::phi1_closed(rho), 1e-9));
    CHECK(rel_close(detail::phi2_taylor(rho), detail::phi2_closed(rho), 1e-9));
    CHECK(rel_close(detail::phi_fn_taylor(rho), detail::phi_fn_closed(rho), 1e-9));
  }
  // Continuity across the series/direct switch inside the closed branch.
  for (double rho : {0.999999, 1.000001, -0.999999, -1.000001}) {
    CHECK(rel_close(phi2(rho), phi2(rho > 0 ? 1.0 : -1.0), 1e-5));
    CHECK(rel_close(phi_fn(rho), phi_fn(rho > 0 ? 1.0 : -1.0), 1e-5));
  }
}

TEST_CASE("overdamped-limit identities at gamma = 1000") {
  const double g = 1000.0, t = 1.0;
  CHECK(std::abs(std::pow(g, 6) * std::pow(t, 4) * phi_fn(g * g * t) - 6.0 * t) <= 1e-4);
  CHECK(std::abs(t * t * t * std::pow(g, 4) * phi2(g * g * t) - 3.0 * t) <= 1e-5);
}

TEST_CASE("kernel moments at the unit point") {
  const KernelMoments m = kernel_moments(1.0, kUnit, 1.0, State({0.0}, {1.0}));
  CHECK(m.m_q[0] == doctest::Approx(0.6321206).epsilon(1e-7));
  CHECK(m.m_p[0] == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(m.c_qq == doctest::Approx(0.3361825).epsilon(1e-7));
  CHECK(m.c_qp == doctest::Approx(0.3995764).epsilon(1e-7));
  CHECK(m.c_pp == doctest::Approx(0.8646647).epsilon(1e-7));
  CHECK(rel_close(m.c_qq * m.c_pp - m.c_qp * m.c_qp, m.block_det, 1e-10));
  CHECK(m.block_det == doctest::Approx(0.1310238300).epsilon(1e-9));
  CHECK_THROWS_AS(kernel_moments(0.0, kUnit, 1.0, State({0.0}, {1.0})), InputError);
  CHECK_THROWS_AS(kernel_moments(1.0, kUnit, 1.5, State({0.0}, {1.0})), InputError);
}

TEST_CASE("kernel moments limits") {
  const State x0({0.3, -0.2}, {1.0, 2.0});
  const KernelMoments small = kernel_moments(1e-12, PhysParams(2.0, 3.0), 1.0, x0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(small.m_q[i] == doctest::Approx(x0.q[i]));
    CHECK(small.m_p[i] == doctest::Approx(x0.p[i]));
  }
  CHECK(small.c_qq < 1e-30);
  CHECK(small.c_pp < 1e-10);
  const KernelMoments large = kernel_moments(200.0, PhysParams(2.0, 3.0), 1.0, x0);
  CHECK(large.c_pp == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(large.m_p[1]) < 1e-200);
  const KernelMoments scaled = kernel_moments(200.0, PhysParams(2.0, 3.0), 0.25, x0);
  CHECK(scaled.c_pp == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("block determinant") {
  const CovDeterminant d = det_cov(1.0, kUnit, 1.0, 1);
  CHECK(rel_close(d.block, d.block_phi, 1e-10));
  const double s2 = kUnit.sigma2();
  CHECK(rel_close(d.block_phi, s2 * s2 * phi_fn(1.0) / 12.0, 1e-14));
  CHECK(rel_close(det_cov(1.0, kUnit, 1.0, 3).full, std::pow(d.block_phi, 3), 1e-14));
  CHECK(rel_close(det_cov(0.7, kUnit, 0.5, 1).block_phi,
                  det_cov(0.7, kUnit, 1.0, 1).block_phi / 0.25, 1e-14));
  CHECK(det_cov(1e-9, kUnit, 1.0, 1).block_phi < 1e-30);
  for (double t : {1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3})
    for (double g : {1e-3, 0.5, 1.0, 10.0, 300.0}) CHECK(det_cov(t, PhysParams(1.0, g), 1.0, 1).block_phi >= 0.0);
  CHECK_THROWS_AS(det_cov(-1.0, kUnit, 1.0, 1), InputError);
}

TEST_CASE("exact sampler matches the closed-form law") {
  const State x0({0.0}, {1.0});
  const KernelMoments m = kernel_moments(1.0, kUnit, 1.0, x0);
  RandomStream rng(11, StreamComponent::kernels, 0, 0);
  const std::size_t n = 100000;
  std::vector<double> q(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State s = kernel_sample(1.0, kUnit, 1.0, x0, rng);
    q[i] = s.q[0];
    p[i] = s.p[0];
  }
  const Moments mq = summarize(q), mp = summarize(p);
  const double nd = static_cast<double>(n);
  CHECK(std::abs(mq.mean - m.m_q[0]) <= 4.0 * std::sqrt(m.c_qq / nd));
  CHECK(std::abs(mp.mean - m.m_p[0]) <= 4.0 * std::sqrt(m.c_pp / nd));
  CHECK(std::abs(mq.variance - m.c_qq) <= 4.0 * m.c_qq * std::sqrt(2.0 / nd));
  CHECK(std::abs(mp.variance - m.c_pp) <= 4.0 * m.c_pp * std::sqrt(2.0 / nd));
  const double corr = correlation(q, p);
  const double rho = m.c_qp / std::sqrt(m.c_qq * m.c_pp);
  CHECK(std::abs(corr - rho) <= 4.0 * (1.0 - rho * rho) / std::sqrt(nd));

  // Marginal KS distances against the Gaussian marginals.
  auto ks_normal = [&](std::vector<double> xs, double mean, double var) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = 0.5 * std::erfc(-(xs[i] - mean) / std::sqrt(2.0 * var));
      d = std::max({d, (i + 1.0) / nd - f, f - i / nd});
    }
    return d;
  };
  CHECK(ks_normal(q, m.m_q[0], m.c_qq) <= 2.0 / std::sqrt(nd));
  CHECK(ks_normal(p, m.m_p[0], m.c_pp) <= 2.0 / std::sqrt(nd));
}

TEST_CASE("sampler edge cases") {
  const State x0({0.5}, {-1.0});
  RandomStream a(1, StreamComponent::kernels, 0, 0), b(1, StreamComponent::kernels, 0, 0);
  const State sa = kernel_sample(0.3, kUnit, 1.0, x0, a);
  const State sb = kernel_sample(0.3, kUnit, 1.0, x0, b);
  CHECK(sa.q == sb.q);
  CHECK(sa.p == sb.p);
  RandomStream c(2, StreamComponent::kernels, 0, 0);
  const State tiny = kernel_sample(1e-12, kUnit, 1.0, x0, c);
  CHECK(std::abs(tiny.q[0] - 0.5) < 1e-5);
  CHECK(std::abs(tiny.p[0] + 1.0) < 1e-5);
  // Zero noise scale gives the mean map.
  const KineticFlow flow(0.4, kUnit, 1.0, 0.0);
  std::vector<double> q{0.5}, p{-1.0};
  flow.apply(q, p, c);
  const KernelMoments m = kernel_moments(0.4, kUnit, 1.0, x0);
  CHECK(q[0] == doctest::Approx(m.m_q[0]));
  CHECK(p[0] == doctest::Approx(m.m_p[0]));
}

TEST_CASE("log density") {
  const State x0({0.0}, {1.0});
  const KernelMoments m = kernel_moments(1.0, kUnit, 1.0, x0);
  const State mode({m.m_q[0]}, {m.m_p[0]});
  CHECK(kernel_logdensity(1.0, kUnit, 1.0, x0, mode) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi * std::sqrt(m.block_det))));
  const double d = 0.37;
  CHECK(kernel_logdensity(1.0, kUnit, 1.0, x0, State({m.m_q[0] + d}, {m.m_p[0]})) ==
        doctest::Approx(kernel_logdensity(1.0, kUnit, 1.0, x0, State({m.m_q[0] - d}, {m.m_p[0]}))));

  // Tensor Gauss-Hermite quadrature (20 points) in whitened coordinates.
  static const double nodes[] = {
      -5.387480890011233, -4.603682449550744, -3.944764040115625, -3.347854567383216,
      -2.788806058428131, -2.254974002089276, -1.738537712116586, -1.234076215395323,
      -0.737473728545394, -0.245340708300901, 0.245340708300901,  0.737473728545394,
      1.234076215395323,  1.738537712116586,  2.254974002089276,  2.788806058428131,
      3.347854567383216,  3.944764040115625,  4.603682449550744,  5.387480890011233};
  static const double weights[] = {
      2.229393645534e-13, 4.399340992273e-10, 1.086069370769e-07, 7.802556478532e-06,
      2.283386360164e-04, 3.243773342238e-03, 2.481052088746e-02, 1.090172060200e-01,
      2.866755053628e-01, 4.622436696006e-01, 4.622436696006e-01, 2.866755053628e-01,
      1.090172060200e-01, 2.481052088746e-02, 3.243773342238e-03, 2.283386360164e-04,
      7.802556478532e-06, 1.086069370769e-07, 4.399340992273e-10, 2.229393645534e-13};
  const double l11 = std::sqrt(m.c_qq);
  const double l21 = m.c_qp / l11;
  const double l22 = std::sqrt(m.block_det / m.c_qq);
  double integral = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double z1 = std::sqrt(2.0) * nodes[i];
      const double z2 = std::sqrt(2.0) * nodes[j];
      const State x1({m.m_q[0] + l11 * z1}, {m.m_p[0] + l21 * z1 + l22 * z2});
      const double dens = std::exp(kernel_logdensity(1.0, kUnit, 1.0, x0, x1));
      // Jacobian 2 l11 l22, Gaussian weight exp(-z^2/2) removed by the rule.
      integral += weights[i] * weights[j] * dens * 2.0 * l11 * l22 *
                  std::exp(nodes[i] * nodes[i] + nodes[j] * nodes[j]);
    }
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(kernel_logdensity(-1.0, kUnit, 1.0, x0, mode), InputError);
}

TEST_CASE("upper-bound series") {
  const UpperBoundParams zero(0.5, 1.0, 0.0);
  CHECK(ub_series_prefactor(1.0, kUnit, zero, 1) == doctest::Approx(1.1283791670955126).epsilon(1e-14));
  CHECK(ub_series_prefactor(1.0, kUnit, zero, 2) == doctest::Approx(2.0 * 1.1283791670955126).epsilon(1e-14));
  double prev = 0.0;
  for (double f : {0.0, 0.1, 0.5, 1.0, 2.0, 4.0}) {
    const double v = ub_series_prefactor(0.8, kUnit, UpperBoundParams(0.5, 1.0, f), 1);
    CHECK(v >= prev);
    prev = v;
  }
  // Closed form for the series: 1/sqrt(pi) + x e^{x^2} (1 + erf x).
  const double x = 0.7;
  const double closed = 1.0 / std::sqrt(std::numbers::pi) + x * std::exp(x * x) * (1.0 + std::erf(x));
  CHECK(closed == doctest::Approx(2.481281055340678).epsilon(1e-14));
  const PhysParams p(1.0, 1.0);
  // Choose f_sup so the series argument is exactly x.
  const double f_sup = x * std::sqrt(p.sigma2()) / std::sqrt(std::numbers::pi * 1.0);
  CHECK(ub_series_prefactor(1.0, p, UpperBoundParams(0.5, 1.0, f_sup), 1) ==
        doctest::Approx(closed / 0.5).epsilon(1e-12));
  // Rescaled form: the gamma t evaluation with sigma^2 = 2 gamma / beta is gamma-free.
  const UpperBoundParams ubp(0.7, 1.3, 0.9);
  const double t = 0.6;
  const double ref = ub_series_prefactor_rescaled(t, 2.0, ubp, 1);
  for (double g : {1.0, 5.0, 50.0}) {
    CHECK(ub_series_prefactor(g * t, PhysParams(2.0, g), ubp, 1) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(UpperBoundParams(1.0, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(UpperBoundParams(0.5, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(UpperBoundParams(0.5, 1.0, -1.0), InputError);
  CHECK_THROWS_AS(ub_series_prefactor(0.0, kUnit, zero, 1), InputError);
  // The 500-term guard fires for very large arguments.
  CHECK_THROWS_AS(ub_series_prefactor(1.0, kUnit, UpperBoundParams(0.5, 1.0, 1e3), 1), NumericalError);
}
