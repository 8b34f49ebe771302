#include "qsdlab/qsd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "qsdlab/errors.hpp"
#include "qsdlab/oracle.hpp"
#include "qsdlab/parallel.hpp"

namespace qsdlab {

std::vector<double> SampleSet::coordinate(std::size_t c) const {
  if (c >= dim) throw_input("sample coordinate out of range");
  std::vector<double> out(count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[i * dim + c];
  return out;
}

namespace {

void check_process(const ProcessSpec& ps) {
  if (ps.kind == FvKind::langevin && !(ps.gamma > 0.0 && std::isfinite(ps.gamma)))
    throw_config("Langevin runs need a positive finite gamma");
}

IntegratorConfig integrator_for(const ProcessSpec& ps, double dt) {
  IntegratorConfig c;
  c.dt = dt;
  c.scheme = ps.kind == FvKind::langevin ? Scheme::splitting_langevin
                                         : Scheme::euler_maruyama_overdamped;
  c.bridge_correction = ps.bridge_correction;
  return c;
}

ClockMode clock_for(const ProcessSpec& ps) {
  return ps.kind == FvKind::langevin ? ClockMode::rescaled : ClockMode::physical;
}

PhysParams params_for(const ProcessSpec& ps, const PhysParams& params) {
  return ps.kind == FvKind::langevin ? params.with_gamma(ps.gamma) : params;
}

std::vector<double> uniform_in(const Domain& domain, RandomStream& rng) {
  if (domain.is_interval()) {
    const Interval1D& iv = domain.as_interval();
    for (;;) {
      std::vector<double> q{iv.a + (iv.b - iv.a) * rng.uniform()};
      if (domain.contains(q)) return q;
    }
  }
  const Ball& ball = std::get<Ball>(domain.shape());
  std::vector<double> q(ball.center.size());
  for (;;) {
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = ball.center[i] + ball.radius * (2.0 * rng.uniform() - 1.0);
    if (domain.contains(q)) return q;
  }
}

}  // namespace

QsdEstimate fleming_viot(const Domain& domain, const ForceField& field, const PhysParams& params,
                         const FvConfig& cfg) {
  check_process(cfg.process);
  if (cfg.N < 2) throw_config("Fleming-Viot needs N >= 2");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw_config("T must be positive and finite");
  if (!(cfg.burn_in >= 0.0 && cfg.burn_in < cfg.T)) throw_config("burn_in must lie in [0, T)");
  if (cfg.snapshot_stride == 0) throw_config("snapshot_stride must be positive");
  if (cfg.N > std::numeric_limits<std::uint32_t>::max()) throw_config("N is too large");

  const bool langevin = cfg.process.kind == FvKind::langevin;
  const PhysParams pp = params_for(cfg.process, params);
  const IntegratorConfig integ = integrator_for(cfg.process, cfg.dt);
  Propagator prop(&domain, field, pp, integ, clock_for(cfg.process));

  const std::uint64_t n_steps = steps_to_reach(cfg.T, cfg.dt);
  const std::uint64_t burn_steps = cfg.burn_in > 0.0 ? steps_to_reach(cfg.burn_in, cfg.dt) : 0;
  if (burn_steps >= n_steps) throw_config("burn_in leaves no steps before T");
  const std::uint64_t post_steps = n_steps - burn_steps;
  const std::uint64_t n_snap = post_steps / cfg.snapshot_stride;
  if (n_snap == 0) throw_config("no snapshot after burn_in; reduce snapshot_stride");

  const std::size_t N = cfg.N;
  const std::size_t d = domain.dim();
  Ensemble ens;
  ens.states.reserve(N);
  std::vector<RandomStream> streams;
  streams.reserve(N);
  const double p_sd = 1.0 / std::sqrt(params.beta());
  for (std::size_t i = 0; i < N; ++i) {
    const auto idx = static_cast<std::uint32_t>(i);
    RandomStream init(cfg.seed, StreamComponent::fv_init, cfg.sub_id, idx);
    std::vector<double> q = uniform_in(domain, init);
    std::vector<double> p(d, 0.0);
    if (langevin)
      for (double& x : p) x = p_sd * init.normal();
    ens.states.emplace_back(std::move(q), std::move(p));
    streams.emplace_back(cfg.seed, StreamComponent::fv_particle, cfg.sub_id, idx);
  }
  RandomStream resample(cfg.seed, StreamComponent::fv_resample, cfg.sub_id, 0);

  QsdEstimate est;
  est.position_samples.dim = d;
  est.position_samples.values.reserve(n_snap * N * d);
  if (langevin) {
    est.momentum_samples.dim = d;
    est.momentum_samples.values.reserve(n_snap * N * d);
  }

  constexpr std::size_t kWindows = 10;
  std::array<std::uint64_t, kWindows> window_events{};
  std::array<std::uint64_t, kWindows> window_steps{};

  for (std::uint64_t k = 0; k < n_steps; ++k) {
    const bool counted = k >= burn_steps;
    const std::size_t window =
        counted ? std::min<std::size_t>(kWindows - 1, (k - burn_steps) * kWindows / post_steps) : 0;
    if (counted) ++window_steps[window];
    std::size_t exits = 0;
    for (std::size_t i = 0; i < N; ++i) {
      State& s = ens.states[i];
      const auto res = prop.step(s.q, s.p, streams[i]);
      if (!res.exited) continue;
      if (++exits == N) {
        std::ostringstream msg;
        msg << "all " << N << " particles left the domain in the sweep at t="
            << static_cast<double>(k) * cfg.dt << "; reduce dt or enlarge the domain";
        throw DegenerateEnsembleError(msg.str());
      }
      std::size_t j = static_cast<std::size_t>(resample.uniform() * static_cast<double>(N - 1));
      if (j > N - 2) j = N - 2;
      if (j >= i) ++j;
      s = ens.states[j];
      ++ens.branch_events;
      if (counted) {
        ++est.post_burn_in_events;
        ++window_events[window];
      }
      if (cfg.keep_branch_log)
        ens.branch_log.push_back({static_cast<double>(k) * cfg.dt + res.elapsed, i, j});
    }
    const std::uint64_t done = k + 1;
    if (done > burn_steps && (done - burn_steps) % cfg.snapshot_stride == 0) {
      ++est.snapshots;
      for (const State& s : ens.states) {
        est.position_samples.values.insert(est.position_samples.values.end(), s.q.begin(),
                                           s.q.end());
        if (langevin)
          est.momentum_samples.values.insert(est.momentum_samples.values.end(), s.p.begin(),
                                             s.p.end());
      }
    }
  }
  ens.time = static_cast<double>(n_steps) * cfg.dt;

  const double nd = static_cast<double>(N);
  const double duration = static_cast<double>(post_steps) * cfg.dt;
  est.lambda0_hat = static_cast<double>(est.post_burn_in_events) / (nd * duration);
  std::vector<double> rates;
  for (std::size_t w = 0; w < kWindows; ++w)
    if (window_steps[w] > 0)
      rates.push_back(static_cast<double>(window_events[w]) /
                      (nd * static_cast<double>(window_steps[w]) * cfg.dt));
  est.lambda0_stderr = batch_estimate(rates).stderr_;
  est.gamma = langevin ? cfg.process.gamma : 0.0;
  est.meta = {N, cfg.T, cfg.dt, cfg.burn_in, cfg.seed};
  est.final_ensemble = std::move(ens);
  return est;
}

// ---------------------------------------------------------------------------

ExitLawStats exit_law_probe(std::span<const State> starts, const Domain& domain,
                            const ForceField& field, const PhysParams& params,
                            const ExitProbeConfig& cfg) {
  if (starts.empty()) throw_input("exit_law_probe: empty start set");
  check_process(cfg.process);
  if (!(cfg.horizon > 0.0)) throw_config("exit-law horizon must be positive");
  if (starts.size() > std::numeric_limits<std::uint32_t>::max())
    throw_input("exit_law_probe: too many starts");
  for (const State& s : starts)
    if (!domain.contains(s.q)) throw_input("exit_law_probe: start outside the domain");

  const PhysParams pp = params_for(cfg.process, params);
  const IntegratorConfig integ = integrator_for(cfg.process, cfg.dt);
  const ClockMode clock = clock_for(cfg.process);
  validate(integ, clock, &domain);
  const bool langevin = cfg.process.kind == FvKind::langevin;

  std::vector<double> times(starts.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(starts.size(), cfg.threads, [&](std::size_t i) {
    RandomStream rng(cfg.seed, StreamComponent::exit_law, cfg.sub_id,
                     static_cast<std::uint32_t>(i));
    State x0 = starts[i];
    if (x0.p.size() != x0.q.size()) {
      if (langevin) throw_input("exit_law_probe: Langevin starts need momenta");
      x0.p.assign(x0.q.size(), 0.0);
    }
    const auto out = simulate_until(x0, domain, field, pp, integ, clock, cfg.horizon, rng);
    if (out.exited) times[i] = out.exit_time;
  });

  ExitLawStats st;
  for (double t : times) {
    if (std::isnan(t))
      ++st.censored;
    else
      st.exit_times.push_back(t);
  }
  st.n = st.exit_times.size();
  st.censored_fraction = static_cast<double>(st.censored) / static_cast<double>(starts.size());
  if (st.censored_fraction > 0.01)
    std::cerr << "warning: " << st.censored << " of " << starts.size()
              << " exit-law runs were censored at the horizon " << cfg.horizon << "\n";
  if (st.n == 0) throw_numerical("exit_law_probe: every run was censored");
  double sum = 0.0;
  for (double t : st.exit_times) sum += t;
  st.mean_exit = sum / static_cast<double>(st.n);
  st.rate_mle = 1.0 / st.mean_exit;
  st.ks_stat = ks_exponential(st.exit_times, st.rate_mle);
  return st;
}

std::vector<State> sample_states(const GridDensity& density, double beta, std::size_t count,
                                 RandomStream& rng) {
  if (!(beta > 0.0)) throw_input("beta must be positive");
  std::vector<State> out;
  out.reserve(count);
  const double sd = 1.0 / std::sqrt(beta);
  for (std::size_t i = 0; i < count; ++i) {
    const double q = density.quantile(rng.uniform());
    out.emplace_back(std::vector<double>{q}, std::vector<double>{sd * rng.normal()});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

GaussianityStats gaussianity_of(std::span<const double> values, const GridDensity& reference) {
  const Moments m = summarize(values);
  return {m.mean, m.variance, m.skewness, m.excess_kurtosis, wasserstein1_1d(values, reference)};
}

}  // namespace

MomentumReport momentum_gaussianity(const SampleSet& momenta, double beta) {
  if (momenta.count() == 0) throw_input("momentum_gaussianity: empty sample");
  if (!(beta > 0.0)) throw_input("beta must be positive");
  const GridDensity reference = gaussian_grid_density(0.0, 1.0 / beta);
  MomentumReport report;
  for (std::size_t c = 0; c < momenta.dim; ++c) {
    const std::vector<double> col = momenta.coordinate(c);
    report.per_coordinate.push_back(gaussianity_of(col, reference));
  }
  report.pooled = gaussianity_of(momenta.values, reference);
  return report;
}

BatchEstimate batched_w1(const SampleSet& samples, const GridDensity& density,
                         std::size_t batches) {
  const std::size_t n = samples.count();
  if (batches < 2 || n < batches) throw_input("batched_w1: need at least one sample per batch");
  const std::vector<double> col = samples.coordinate(0);
  std::vector<double> w(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    w[b] = wasserstein1_1d(std::span<const double>(col.data() + lo, hi - lo), density);
  }
  return batch_estimate(w);
}

double max_bin_mass(std::span<const double> q, std::span<const double> p, double q_lo,
                    double q_hi, double p_lo, double p_hi, std::size_t bins) {
  if (q.size() != p.size() || q.empty()) throw_input("max_bin_mass: need paired samples");
  if (!(q_lo < q_hi && p_lo < p_hi) || bins == 0) throw_input("max_bin_mass: bad histogram box");
  std::vector<std::uint64_t> counts(bins * bins, 0);
  const double nb = static_cast<double>(bins);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double u = (q[i] - q_lo) / (q_hi - q_lo);
    const double v = (p[i] - p_lo) / (p_hi - p_lo);
    if (!(u >= 0.0 && u < 1.0 && v >= 0.0 && v < 1.0)) continue;
    ++counts[static_cast<std::size_t>(u * nb) * bins + static_cast<std::size_t>(v * nb)];
  }
  const auto peak = *std::max_element(counts.begin(), counts.end());
  return static_cast<double>(peak) / static_cast<double>(q.size());
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> gamma_sweep(std::span<const double> gammas, const Domain& domain,
                                  const ForceField& field, double beta, const SweepConfig& cfg) {
  if (gammas.empty()) throw_config("gamma list is empty");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0) || !std::isfinite(gammas[i]))
      throw_config("every gamma must be positive and finite");
    if (i > 0 && !(gammas[i] > gammas[i - 1])) throw_config("gamma list must be increasing");
  }
  std::optional<GridDensity> oracle;
  if (domain.is_interval()) oracle = oracle_qsd(field, beta, domain.as_interval(), cfg.oracle_n).density();

  const PhysParams base(beta, 1.0);
  std::vector<SweepRow> rows(gammas.size());
  parallel_for(gammas.size(), cfg.threads, [&](std::size_t g) {
    FvConfig fv;
    fv.process = ProcessSpec::langevin(gammas[g]);
    fv.N = cfg.N;
    fv.T = cfg.T;
    fv.dt = cfg.dt;
    fv.burn_in = cfg.burn_in;
    fv.snapshot_stride = cfg.snapshot_stride;
    fv.seed = cfg.seed;
    fv.sub_id = static_cast<std::uint32_t>(g);
    const QsdEstimate est = fleming_viot(domain, field, base, fv);

    SweepRow& row = rows[g];
    row.gamma = gammas[g];
    row.N = cfg.N;
    row.T = cfg.T;
    row.dt = cfg.dt;
    row.lambda0_rescaled = est.lambda0_hat;
    row.lambda0_stderr = est.lambda0_stderr;
    row.branch_events = est.post_burn_in_events;
    row.seed = cfg.seed;
    if (oracle) {
      const std::vector<double> q = est.position_samples.coordinate(0);
      row.w1_position = wasserstein1_1d(q, *oracle);
      row.w1_stderr = batched_w1(est.position_samples, *oracle).stderr_;
    } else {
      row.w1_position = std::numeric_limits<double>::quiet_NaN();
      row.w1_stderr = std::numeric_limits<double>::quiet_NaN();
    }
    const MomentumReport mom = momentum_gaussianity(est.momentum_samples, beta);
    row.p_mean = mom.pooled.mean;
    row.p_var = mom.pooled.variance;
    row.p_skew = mom.pooled.skewness;
    row.p_exkurt = mom.pooled.excess_kurtosis;
    double abs_sum = 0.0;
    for (double p : est.momentum_samples.values) abs_sum += std::abs(p);
    row.mean_abs_p = abs_sum / static_cast<double>(est.momentum_samples.values.size());
    const double r = domain.circumscribed_radius();
    const double p_box = 5.0 / std::sqrt(beta);
    row.max_bin_mass = max_bin_mass(est.position_samples.coordinate(0),
                                    est.momentum_samples.coordinate(0), -r, r, -p_box, p_box);
  });
  return rows;
}

}  // namespace qsdlab
