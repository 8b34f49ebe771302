#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qsdlab/kinetic_kernels.hpp"
#include "qsdlab/model.hpp"
#include "qsdlab/random.hpp"

namespace qsdlab {

enum class Scheme { euler_maruyama_overdamped, splitting_langevin };

/// physical: reported time is Langevin time. rescaled: reported time t stands
/// for physical time gamma t (the slow clock of the overdamped limit).
enum class ClockMode { physical, rescaled };

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::euler_maruyama_overdamped;
  /// Brownian-bridge exit correction; 1D overdamped on an interval only.
  bool bridge_correction = false;
  /// Multiplies every Gaussian increment. 1 in production; 0 turns the
  /// steppers into their deterministic drift maps for testing.
  double noise_scale = 1.0;
};

void validate(const IntegratorConfig& cfg, ClockMode clock, const Domain* domain);

/// x + F(x) dt + sqrt(2 dt / beta) xi.
std::vector<double> overdamped_step(std::span<const double> x, const ForceField& field,
                                    const PhysParams& params, double dt, RandomStream& rng,
                                    double noise_scale = 1.0);

/// Strang splitting: half kick, exact free kinetic OU flow over dt, half kick.
State langevin_step_splitting(const State& x, const ForceField& field, const PhysParams& params,
                              double dt, RandomStream& rng, double noise_scale = 1.0);

/// Advances one reported step at a time, detecting absorption. In the
/// rescaled clock a reported step dt is split into n_sub = max(1, ceil(gamma))
/// physical substeps of length gamma dt / n_sub, each followed by an exit check.
class Propagator {
 public:
  Propagator(const Domain* domain, const ForceField& field, const PhysParams& params,
             const IntegratorConfig& cfg, ClockMode clock);

  struct StepResult {
    bool exited = false;
    /// When exited: elapsed reported time within the step at detection.
    double elapsed = 0.0;
  };

  /// Advances q (and p for Langevin) in place. For a Langevin step p must have
  /// the same size as q; for overdamped it is ignored.
  StepResult step(std::span<double> q, std::span<double> p, RandomStream& rng);

  double dt() const { return cfg_.dt; }
  std::size_t substeps() const { return n_sub_; }
  double physical_substep() const { return h_; }
  Scheme scheme() const { return cfg_.scheme; }

 private:
  StepResult step_overdamped(std::span<double> q, RandomStream& rng);
  StepResult step_langevin(std::span<double> q, std::span<double> p, RandomStream& rng);

  const Domain* domain_;
  const ForceField* field_;
  PhysParams params_;
  IntegratorConfig cfg_;
  std::size_t n_sub_ = 1;
  double h_ = 0.0;
  std::optional<KineticFlow> flow_;
  std::vector<double> force_;
  std::vector<double> before_;
  double noise_ = 0.0;  // sqrt(2 dt / beta) * noise_scale (overdamped)
};

struct TrajectoryOutcome {
  bool exited = false;
  double exit_time = 0.0;  // reported clock; meaningful iff exited
  State final_state;
  std::uint64_t steps = 0;
};

/// Number of reported steps needed to reach `horizon`, tolerant of the
/// rounding in horizon / dt.
std::uint64_t steps_to_reach(double horizon, double dt);

TrajectoryOutcome simulate_until(const State& x0, const Domain& domain, const ForceField& field,
                                 const PhysParams& params, const IntegratorConfig& cfg,
                                 ClockMode clock, double horizon, RandomStream& rng);

struct GibbsReport {
  std::uint64_t samples = 0;
  double q_mean = 0.0, q_var = 0.0;
  double p_mean = 0.0, p_var = 0.0;  // NaN for overdamped
  double qp_corr = 0.0;              // NaN for overdamped
  std::vector<double> final_q;
};

/// Unconditioned long run from x0; moments of the first coordinate are
/// accumulated over n_steps after burn_in_steps.
GibbsReport gibbs_probe(const ForceField& field, const PhysParams& params,
                        const IntegratorConfig& cfg, std::uint64_t n_steps,
                        std::uint64_t burn_in_steps, const State& x0, RandomStream& rng);

}  // namespace qsdlab
