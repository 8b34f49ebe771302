#include <doctest.h>

#include <cmath>
#include <vector>

#include "qsdlab/coupling.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/random.hpp"
#include "qsdlab/statistics.hpp"

using namespace qsdlab;

namespace {

const PhysParams kUnit(1.0, 1.0);

ForceField zero_field() { return builtin_force(FieldSpec::zero(), 5.0); }

CouplingConfig small_config(double gamma) {
  CouplingConfig cfg;
  cfg.gamma = gamma;
  cfg.T = 1.0;
  cfg.n_grid = 200;
  cfg.replicates = 50;
  cfg.x0 = State({0.2}, {0.5});
  return cfg;
}

}  // namespace

TEST_CASE("h_T values and bound") {
  CHECK(h_T(0.0, 3.0, 2.0) == 0.0);
  CHECK(h_T(1.0, 2.0, 1.0) == doctest::Approx(0.9820137900379084).epsilon(1e-14));
  CHECK(h_T(1.0, 1.0, 1.0) == doctest::Approx(2.0 * (1.0 - std::exp(-1.0)) / (1.0 - std::exp(-2.0))));
  RandomStream rng(1, StreamComponent::sampling, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const double gamma = 0.1 + 200.0 * rng.uniform();
    const double T = 0.01 + 10.0 * rng.uniform();
    const double t = T * rng.uniform();
    CHECK(h_T(t, gamma, T) <= 2.0 / gamma * (1.0 + 1e-15));
  }
  CHECK(h_T(5.0, 1e4, 5.0) == doctest::Approx(2e-4));
  CHECK_THROWS_AS(h_T(1.5, 1.0, 1.0), InputError);
  CHECK_THROWS_AS(h_T(-0.1, 1.0, 1.0), InputError);
}

TEST_CASE("configuration checks") {
  CouplingConfig cfg = small_config(0.5);
  CHECK_THROWS_WITH_AS(validate(cfg), "gamma must exceed 1", ConfigError);
  cfg = small_config(2.0);
  cfg.n_grid = 1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = small_config(1e4);
  cfg.n_grid = 10000;
  CHECK_THROWS_AS(validate(cfg), ConfigError);  // memory guard
  cfg = small_config(10.0);
  CHECK(coupling_substeps(cfg) == 50);
}

TEST_CASE("F = 0: w equals q + Z exactly and p matches p e^{-gamma^2 T} + Y_T") {
  CouplingConfig cfg = small_config(5.0);
  cfg.friction = FrictionUpdate::exponential;
  const ForceField zero = zero_field();
  const CoupledPaths paths = simulate_coupled(cfg, zero, kUnit, 3);
  const std::vector<double> w = build_w(paths, cfg, zero, kUnit);
  CHECK(w[0] == cfg.x0.q[0]);
  for (std::size_t k = 0; k <= cfg.n_grid; k += 7) {
    const double z = z_at(paths, k, kUnit.beta())[0];
    CHECK(std::abs(w[k] - (cfg.x0.q[0] + z)) <= 1e-12);
  }
  const std::size_t n_fast = cfg.n_grid * coupling_substeps(cfg);
  const double delta = cfg.gamma * cfg.T / static_cast<double>(n_fast);
  const double decay_total = std::pow(std::exp(-cfg.gamma * delta), static_cast<double>(n_fast));
  const double p_T = paths.p[cfg.n_grid];
  CHECK(std::abs(p_T - (cfg.x0.p[0] * decay_total + paths.y_terminal[0])) <= 1e-12);

  // With the Euler friction update the identity holds up to discretization.
  cfg.friction = FrictionUpdate::euler;
  const CoupledPaths e = simulate_coupled(cfg, zero, kUnit, 3);
  CHECK(std::abs(e.p[cfg.n_grid] - (cfg.x0.p[0] * std::exp(-cfg.gamma * cfg.gamma * cfg.T) +
                                    e.y_terminal[0])) < 0.05);
}

TEST_CASE("same seed gives identical paths") {
  const CouplingConfig cfg = small_config(4.0);
  const ForceField dw = builtin_force(FieldSpec::double_well(1.0), 5.0);
  const CoupledPaths a = simulate_coupled(cfg, dw, kUnit, 1);
  const CoupledPaths b = simulate_coupled(cfg, dw, kUnit, 1);
  const CoupledPaths c = simulate_coupled(cfg, dw, kUnit, 2);
  CHECK(a.q == b.q);
  CHECK(a.y == b.y);
  CHECK(a.qbar == b.qbar);
  CHECK(a.q != c.q);
}

TEST_CASE("B^(gamma) is a standard Brownian motion in the slow clock") {
  CouplingConfig cfg = small_config(3.0);
  cfg.replicates = 4000;
  cfg.n_grid = 20;
  const CouplingReport r = coupling_experiment(cfg, zero_field(), PhysParams(2.0, 1.0), 1);
  const double se = cfg.T * std::sqrt(2.0 / cfg.replicates);
  CHECK(std::abs(r.bT_var - cfg.T) <= 4.0 * se);
}

TEST_CASE("terminal momentum variance for F = 0, p0 = 0") {
  CouplingConfig cfg = small_config(3.0);
  cfg.x0 = State({0.0}, {0.0});
  cfg.replicates = 10000;
  cfg.n_grid = 10;
  cfg.friction = FrictionUpdate::exponential;
  cfg.friction_step = 0.002;
  const double beta = 2.0;
  const CouplingReport r = coupling_experiment(cfg, zero_field(), PhysParams(beta, 1.0), 1);
  const double expected = -std::expm1(-2.0 * cfg.gamma * cfg.gamma * cfg.T) / beta;
  // Discrete recursion variance exceeds the continuous one by about gamma delta.
  const double se = expected * std::sqrt(2.0 / cfg.replicates);
  CHECK(std::abs(r.pT_var - expected) <= 4.0 * se + expected * 0.002);
  CHECK(r.yT_var_expected == doctest::Approx(expected));
  CHECK(std::abs(r.yT_skew) <= 0.05 * 4.0 / 2.0);
  CHECK(std::abs(r.yT_exkurt) <= 0.1 * 2.0);
}

TEST_CASE("report structure and determinism across thread counts") {
  const CouplingConfig cfg = small_config(6.0);
  const ForceField dw = builtin_force(FieldSpec::double_well(1.0), 5.0);
  const CouplingReport a = coupling_experiment(cfg, dw, kUnit, 1);
  const CouplingReport b = coupling_experiment(cfg, dw, kUnit, 3);
  CHECK(a.sup_qw_mean == b.sup_qw_mean);
  CHECK(a.sup_wbar_mean == b.sup_wbar_mean);
  CHECK(a.max_abs_corr_zy == b.max_abs_corr_zy);
  CHECK(a.corr_zy.size() == 10);
  for (const auto& row : a.corr_zy) {
    REQUIRE(row.size() == 1);
    CHECK(std::abs(row[0]) <= 1.0);
  }
  CHECK(a.sup_qw_mean > 0.0);
  CHECK(a.sup_qw_stderr > 0.0);
}

TEST_CASE("sup |q - w| shrinks with gamma") {
  CouplingConfig cfg = small_config(4.0);
  cfg.replicates = 100;
  cfg.n_grid = 1000;
  cfg.x0 = State({0.0}, {0.0});
  const ForceField dw = builtin_force(FieldSpec::double_well(1.0), 5.0);
  const std::vector<double> gammas{4.0, 16.0, 64.0};
  const auto reports = coupling_sweep(gammas, cfg, dw, kUnit, 1);
  REQUIRE(reports.size() == 3);
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    CHECK(reports[i + 1].sup_qw_mean < reports[i].sup_qw_mean);
    CHECK(reports[i + 1].sup_wbar_mean < reports[i].sup_wbar_mean);
  }
}

TEST_CASE("Z and Y_T are uncorrelated in two dimensions") {
  CouplingConfig cfg = small_config(5.0);
  cfg.x0 = State({0.0, 0.0}, {0.0, 0.0});
  cfg.replicates = 3000;
  cfg.n_grid = 50;
  const ForceField harm = builtin_force(FieldSpec::harmonic(1.0), 5.0);
  const CouplingReport r = coupling_experiment(cfg, harm, kUnit, 1);
  REQUIRE(r.corr_zy.front().size() == 4);
  CHECK(r.max_abs_corr_zy <= 4.5 / std::sqrt(3000.0));
}
