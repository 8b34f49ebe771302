#include "qsdlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsdlab/errors.hpp"

namespace qsdlab {

void validate(const IntegratorConfig& cfg, ClockMode clock, const Domain* domain) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw_config("dt must be positive and finite");
  if (!(cfg.noise_scale >= 0.0)) throw_config("noise_scale must be nonnegative");
  if (clock == ClockMode::rescaled && cfg.scheme != Scheme::splitting_langevin)
    throw_config("the rescaled clock applies to the Langevin splitting scheme only");
  if (cfg.bridge_correction) {
    if (cfg.scheme != Scheme::euler_maruyama_overdamped)
      throw_config("bridge correction requires the overdamped Euler-Maruyama scheme");
    if (domain == nullptr || !domain->is_interval())
      throw_config("bridge correction requires an interval domain");
  }
}

std::vector<double> overdamped_step(std::span<const double> x, const ForceField& field,
                                    const PhysParams& params, double dt, RandomStream& rng,
                                    double noise_scale) {
  if (!(dt > 0.0)) throw_input("dt must be positive");
  std::vector<double> out(x.begin(), x.end());
  std::vector<double> f(x.size());
  field.force(x, f);
  const double noise = noise_scale * std::sqrt(2.0 * dt / params.beta());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += f[i] * dt + noise * rng.normal();
  return out;
}

State langevin_step_splitting(const State& x, const ForceField& field, const PhysParams& params,
                              double dt, RandomStream& rng, double noise_scale) {
  if (!(dt > 0.0)) throw_input("dt must be positive");
  State y = x;
  std::vector<double> f(x.dim());
  field.force(y.q, f);
  for (std::size_t i = 0; i < y.dim(); ++i) y.p[i] += 0.5 * dt * f[i];
  KineticFlow(dt, params, 1.0, noise_scale).apply(y.q, y.p, rng);
  field.force(y.q, f);
  for (std::size_t i = 0; i < y.dim(); ++i) y.p[i] += 0.5 * dt * f[i];
  return y;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const Domain* domain, const ForceField& field, const PhysParams& params,
                       const IntegratorConfig& cfg, ClockMode clock)
    : domain_(domain), field_(&field), params_(params), cfg_(cfg) {
  validate(cfg, clock, domain);
  if (cfg.scheme == Scheme::splitting_langevin) {
    if (clock == ClockMode::rescaled) {
      n_sub_ = static_cast<std::size_t>(std::max(1.0, std::ceil(params.gamma())));
      h_ = params.gamma() * cfg.dt / static_cast<double>(n_sub_);
    } else {
      n_sub_ = 1;
      h_ = cfg.dt;
    }
    flow_.emplace(h_, params, 1.0, cfg.noise_scale);
  } else {
    h_ = cfg.dt;
    noise_ = cfg.noise_scale * std::sqrt(2.0 * cfg.dt / params.beta());
  }
}

Propagator::StepResult Propagator::step(std::span<double> q, std::span<double> p,
                                        RandomStream& rng) {
  if (cfg_.scheme == Scheme::splitting_langevin) return step_langevin(q, p, rng);
  return step_overdamped(q, rng);
}

Propagator::StepResult Propagator::step_overdamped(std::span<double> q, RandomStream& rng) {
  const std::size_t d = q.size();
  force_.resize(d);
  field_->force(q, force_);
  if (cfg_.bridge_correction) before_.assign(q.begin(), q.end());
  for (std::size_t i = 0; i < d; ++i) q[i] += force_[i] * cfg_.dt + noise_ * rng.normal();

  StepResult result;
  if (domain_ == nullptr) return result;
  if (!domain_->contains(q)) {
    result.exited = true;
    result.elapsed = cfg_.dt;
    return result;
  }
  if (cfg_.bridge_correction && noise_ > 0.0) {
    // P(bridge crosses level c | endpoints) = exp(-2 d1 d2 / (s^2 dt)), with
    // s^2 dt = noise_^2 the increment variance.
    const Interval1D& iv = domain_->as_interval();
    const double var = noise_ * noise_;
    const double x0 = before_[0];
    const double x1 = q[0];
    const double stay_a = -std::expm1(-2.0 * (x0 - iv.a) * (x1 - iv.a) / var);
    const double stay_b = -std::expm1(-2.0 * (iv.b - x0) * (iv.b - x1) / var);
    const double cross = 1.0 - stay_a * stay_b;
    if (cross > 0.0 && rng.uniform() < cross) {
      result.exited = true;
      result.elapsed = 0.5 * cfg_.dt;
    }
  }
  return result;
}

Propagator::StepResult Propagator::step_langevin(std::span<double> q, std::span<double> p,
                                                 RandomStream& rng) {
  const std::size_t d = q.size();
  const bool kicks = !field_->is_zero();
  const double half = 0.5 * h_;
  force_.resize(d);
  if (kicks) field_->force(q, force_);
  StepResult result;
  for (std::size_t j = 0; j < n_sub_; ++j) {
    if (kicks)
      for (std::size_t i = 0; i < d; ++i) p[i] += half * force_[i];
    flow_->apply(q, p, rng);
    if (kicks) {
      field_->force(q, force_);
      for (std::size_t i = 0; i < d; ++i) p[i] += half * force_[i];
    }
    if (domain_ != nullptr && !domain_->contains(q)) {
      result.exited = true;
      result.elapsed = cfg_.dt * static_cast<double>(j + 1) / static_cast<double>(n_sub_);
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::uint64_t steps_to_reach(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
    return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(ratio));
}

TrajectoryOutcome simulate_until(const State& x0, const Domain& domain, const ForceField& field,
                                 const PhysParams& params, const IntegratorConfig& cfg,
                                 ClockMode clock, double horizon, RandomStream& rng) {
  if (!(horizon > 0.0)) throw_input("horizon must be positive");
  if (x0.q.size() != domain.dim()) throw_input("initial state dimension does not match domain");
  if (!domain.contains(x0.q)) throw_input("initial position lies outside the open domain");
  if (cfg.scheme == Scheme::splitting_langevin && x0.p.size() != x0.q.size())
    throw_input("Langevin trajectories need a momentum of the same dimension");

  Propagator prop(&domain, field, params, cfg, clock);
  TrajectoryOutcome out;
  out.final_state = x0;
  const std::uint64_t max_steps = steps_to_reach(horizon, cfg.dt);
  for (std::uint64_t k = 0; k < max_steps; ++k) {
    const auto res = prop.step(out.final_state.q, out.final_state.p, rng);
    ++out.steps;
    if (res.exited) {
      out.exited = true;
      out.exit_time = static_cast<double>(k) * cfg.dt + res.elapsed;
      break;
    }
  }
  return out;
}

GibbsReport gibbs_probe(const ForceField& field, const PhysParams& params,
                        const IntegratorConfig& cfg, std::uint64_t n_steps,
                        std::uint64_t burn_in_steps, const State& x0, RandomStream& rng) {
  if (field.is_zero()) throw_input("gibbs_probe needs a confining field");
  if (n_steps < 2) throw_input("gibbs_probe needs at least two sampled steps");
  const bool langevin = cfg.scheme == Scheme::splitting_langevin;
  Propagator prop(nullptr, field, params, cfg, ClockMode::physical);
  State x = x0;
  if (langevin && x.p.size() != x.q.size()) throw_input("Langevin probe needs a momentum");
  for (std::uint64_t k = 0; k < burn_in_steps; ++k) prop.step(x.q, x.p, rng);

  // Welford accumulators for q, p and their co-moment.
  double mq = 0.0, mp = 0.0, m2q = 0.0, m2p = 0.0, cqp = 0.0;
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    prop.step(x.q, x.p, rng);
    const double n = static_cast<double>(k + 1);
    const double dq = x.q[0] - mq;
    mq += dq / n;
    m2q += dq * (x.q[0] - mq);
    if (langevin) {
      const double dp = x.p[0] - mp;
      mp += dp / n;
      m2p += dp * (x.p[0] - mp);
      cqp += dq * (x.p[0] - mp);
    }
  }
  const double denom = static_cast<double>(n_steps - 1);
  GibbsReport report;
  report.samples = n_steps;
  report.q_mean = mq;
  report.q_var = m2q / denom;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.p_mean = langevin ? mp : nan;
  report.p_var = langevin ? m2p / denom : nan;
  report.qp_corr = langevin ? cqp / std::sqrt(m2q * m2p) : nan;
  report.final_q = x.q;
  return report;
}

}  // namespace qsdlab
