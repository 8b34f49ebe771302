#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsdlab/dynamics.hpp"
#include "qsdlab/model.hpp"
#include "qsdlab/statistics.hpp"

namespace qsdlab {

enum class FvKind { overdamped, langevin };

/// Which killed process to simulate. Langevin runs use the splitting scheme
/// in the rescaled clock; overdamped runs use Euler-Maruyama.
struct ProcessSpec {
  FvKind kind = FvKind::overdamped;
  double gamma = 0.0;  // Langevin only
  bool bridge_correction = false;  // overdamped on an interval only

  static ProcessSpec overdamped(bool bridge = false) { return {FvKind::overdamped, 0.0, bridge}; }
  static ProcessSpec langevin(double gamma) { return {FvKind::langevin, gamma, false}; }
};

/// Flat row-major storage of dim-dimensional samples.
struct SampleSet {
  std::size_t dim = 0;
  std::vector<double> values;

  std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::vector<double> coordinate(std::size_t c) const;
};

struct BranchEvent {
  double time;
  std::size_t exited;
  std::size_t donor;
};

struct Ensemble {
  std::vector<State> states;
  double time = 0.0;
  std::uint64_t branch_events = 0;
  std::vector<BranchEvent> branch_log;  // filled when FvConfig::keep_branch_log
};

struct FvConfig {
  ProcessSpec process;
  std::size_t N = 1000;
  double T = 10.0;
  double dt = 1e-3;
  double burn_in = 5.0;
  std::size_t snapshot_stride = 100;
  std::uint64_t seed = 1;
  /// Distinguishes ensembles sharing a seed, e.g. the position in a sweep.
  std::uint32_t sub_id = 0;
  bool keep_branch_log = false;
};

struct FvMeta {
  std::size_t N = 0;
  double T = 0.0;
  double dt = 0.0;
  double burn_in = 0.0;
  std::uint64_t seed = 0;
};

struct QsdEstimate {
  SampleSet position_samples;
  SampleSet momentum_samples;  // empty for overdamped
  std::size_t snapshots = 0;
  double lambda0_hat = 0.0;
  double lambda0_stderr = 0.0;
  double gamma = 0.0;  // 0 for overdamped
  std::uint64_t post_burn_in_events = 0;
  FvMeta meta;
  Ensemble final_ensemble;
};

/// Fleming-Viot ensemble. Particles are advanced one after another within a
/// sweep; an exiting particle takes the current state of a uniformly chosen
/// other particle. Every exit is a branch event; lambda0_hat counts those after
/// burn_in per particle and unit reported time, with a standard error from ten
/// equal time windows. Throws DegenerateEnsembleError if all N exit in one
/// sweep.
QsdEstimate fleming_viot(const Domain& domain, const ForceField& field, const PhysParams& params,
                         const FvConfig& cfg);

struct ExitLawStats {
  std::size_t n = 0;  // uncensored runs
  std::size_t censored = 0;
  double censored_fraction = 0.0;
  double mean_exit = 0.0;
  double rate_mle = 0.0;
  double ks_stat = 0.0;
  std::vector<double> exit_times;
};

struct ExitProbeConfig {
  ProcessSpec process;
  double dt = 1e-3;
  double horizon = 10.0;
  std::uint64_t seed = 1;
  std::uint32_t sub_id = 0;
  std::size_t threads = 1;
};

/// Independent absorbed trajectories from each start. Runs that survive the
/// horizon are censored and excluded from the statistics; a warning goes to
/// stderr when more than 1% are censored.
ExitLawStats exit_law_probe(std::span<const State> starts, const Domain& domain,
                            const ForceField& field, const PhysParams& params,
                            const ExitProbeConfig& cfg);

/// Draws count states with positions from the density and momenta from
/// N(0, 1/beta).
std::vector<State> sample_states(const GridDensity& density, double beta, std::size_t count,
                                 RandomStream& rng);

struct GaussianityStats {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double w1 = 0.0;  // against N(0, 1/beta)
};

struct MomentumReport {
  std::vector<GaussianityStats> per_coordinate;
  GaussianityStats pooled;  // all coordinates together
};

MomentumReport momentum_gaussianity(const SampleSet& momenta, double beta);

/// W1 of each of `batches` contiguous blocks of the first coordinate against
/// the density; mean and standard error over blocks.
BatchEstimate batched_w1(const SampleSet& samples, const GridDensity& density,
                         std::size_t batches = 10);

/// Largest fraction of samples in one cell of a bins x bins histogram over
/// [q_lo, q_hi] x [p_lo, p_hi]; samples outside count toward the total only.
double max_bin_mass(std::span<const double> q, std::span<const double> p, double q_lo,
                    double q_hi, double p_lo, double p_hi, std::size_t bins = 50);

struct SweepConfig {
  std::size_t N = 1000;
  double T = 10.0;
  double dt = 1e-3;
  double burn_in = 5.0;
  std::size_t snapshot_stride = 100;
  std::uint64_t seed = 1;
  std::size_t oracle_n = 4000;
  std::size_t threads = 1;
};

struct SweepRow {
  double gamma = 0.0;
  std::size_t N = 0;
  double T = 0.0;
  double dt = 0.0;
  double lambda0_rescaled = 0.0;
  double lambda0_stderr = 0.0;
  double w1_position = 0.0;   // NaN off an interval domain
  double w1_stderr = 0.0;
  double p_mean = 0.0, p_var = 0.0, p_skew = 0.0, p_exkurt = 0.0;
  std::uint64_t branch_events = 0;
  std::uint64_t seed = 0;
  double max_bin_mass = 0.0;
  double mean_abs_p = 0.0;
};

/// One Langevin Fleming-Viot run per gamma in the rescaled clock, in parallel
/// over gamma values (sub id = position in the list).
std::vector<SweepRow> gamma_sweep(std::span<const double> gammas, const Domain& domain,
                                  const ForceField& field, double beta, const SweepConfig& cfg);

}  // namespace qsdlab
