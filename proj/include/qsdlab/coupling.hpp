#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qsdlab/model.hpp"

namespace qsdlab {

/// (2/gamma) (e^{-gamma^2 (T - t)} - e^{-gamma^2 T}) / (1 - e^{-2 gamma^2 T}), 0 <= t <= T.
double h_T(double t, double gamma, double T);

/// Friction part of the fast Euler-Maruyama momentum update: p - gamma p delta
/// (euler), or e^{-gamma delta} p, which matches the Y recursion exactly.
enum class FrictionUpdate { euler, exponential };

struct CouplingConfig {
  double gamma = 10.0;  // must exceed 1
  double T = 1.0;       // slow-clock horizon
  std::size_t n_grid = 10000;  // slow-grid intervals, t_k = k T / n_grid
  State x0 = State::at_rest({0.0});
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  /// Target value of gamma * delta for the fast step delta; the number of
  /// fast steps per slow interval is ceil(gamma^2 T / (n_grid friction_step)).
  double friction_step = 0.01;
  FrictionUpdate friction = FrictionUpdate::euler;
  std::uint32_t sub_id = 0;
};

void validate(const CouplingConfig& cfg);

/// Fast steps per slow interval.
std::size_t coupling_substeps(const CouplingConfig& cfg);

/// Slow-grid record of one replicate, all driven by a single fast-clock
/// increment sequence. Vectors of processes are (n_grid + 1) x d row-major.
struct CoupledPaths {
  std::size_t dim = 0;
  std::size_t n_grid = 0;
  double T = 0.0;
  double gamma = 0.0;
  std::vector<double> q;        // q_{gamma t_k}
  std::vector<double> p;        // p_{gamma t_k}
  std::vector<double> b_gamma;  // B^(gamma)_{t_k} = B_{gamma t_k} / sqrt(gamma)
  std::vector<double> y;        // Y^(gamma)_{t_k}
  std::vector<double> qbar;     // overdamped EM driven by B^(gamma)
  std::vector<double> y_terminal;

  double t(std::size_t k) const;
  std::span<const double> at(const std::vector<double>& path, std::size_t k) const {
    return {path.data() + k * dim, dim};
  }
};

CoupledPaths simulate_coupled(const CouplingConfig& cfg, const ForceField& field,
                              const PhysParams& params, std::size_t replicate);

/// Second pass: w_{k+1} = w_k + F(w_k) dt + sqrt(2/beta) dB^(gamma)_k
/// - (h_T(t_{k+1}) - h_T(t_k)) Y_T, started at w_0 = q.
std::vector<double> build_w(const CoupledPaths& paths, const CouplingConfig& cfg,
                            const ForceField& field, const PhysParams& params);

/// Z_{t_k,T} = sqrt(2/beta) B^(gamma)_{t_k} - h_T(t_k) Y_T for one grid index.
std::vector<double> z_at(const CoupledPaths& paths, std::size_t k, double beta);

struct CouplingReport {
  double gamma = 0.0;
  double T = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  double sup_qw_mean = 0.0, sup_qw_stderr = 0.0;
  double sup_wbar_mean = 0.0, sup_wbar_stderr = 0.0;
  /// corr_zy[i][a * d + b] = corr(Z_{t_i,T} component a, Y_T component b),
  /// t_i = i T / 10 for i = 1..10.
  std::vector<std::vector<double>> corr_zy;
  double max_abs_corr_zy = 0.0;
  // Pooled over coordinates.
  double pT_mean = 0.0, pT_var = 0.0;
  double qp_terminal_corr = 0.0;
  double yT_var = 0.0, yT_skew = 0.0, yT_exkurt = 0.0;
  double yT_var_expected = 0.0;  // beta^{-1} (1 - e^{-2 gamma^2 T})
  double bT_var = 0.0;           // Var B^(gamma)_T, T in law
};

/// Replicates in parallel, each from its own stream (seed, sub_id, replicate).
/// Only beta is taken from params; the friction is cfg.gamma.
CouplingReport coupling_experiment(const CouplingConfig& cfg, const ForceField& field,
                                   const PhysParams& params, std::size_t threads);

/// One report per gamma; the list position is used as the stream sub id.
std::vector<CouplingReport> coupling_sweep(std::span<const double> gammas,
                                           const CouplingConfig& base, const ForceField& field,
                                           const PhysParams& params, std::size_t threads);

}  // namespace qsdlab
