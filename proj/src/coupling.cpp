#include "qsdlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qsdlab/errors.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/random.hpp"
#include "qsdlab/statistics.hpp"

namespace qsdlab {

double h_T(double t, double gamma, double T) {
  if (!(gamma > 0.0) || !(T > 0.0)) throw_input("h_T needs gamma > 0 and T > 0");
  if (!(t >= 0.0 && t <= T)) throw_input("h_T needs 0 <= t <= T");
  const double g2 = gamma * gamma;
  const double num = std::exp(-g2 * (T - t)) * -std::expm1(-g2 * t);
  const double den = -std::expm1(-2.0 * g2 * T);
  return (2.0 / gamma) * num / den;
}

namespace {
constexpr double kMaxFastSteps = 1e8;
constexpr std::size_t kCorrTimes = 10;
}  // namespace

std::size_t coupling_substeps(const CouplingConfig& cfg) {
  const double target = cfg.gamma * cfg.gamma * cfg.T /
                        (static_cast<double>(cfg.n_grid) * cfg.friction_step);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(target - 1e-9)));
}

void validate(const CouplingConfig& cfg) {
  if (!(cfg.gamma > 1.0) || !std::isfinite(cfg.gamma)) throw_config("gamma must exceed 1");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw_config("T must be positive and finite");
  if (cfg.n_grid < 2) throw_config("n_grid must be at least 2");
  if (cfg.replicates < 2) throw_config("replicates must be at least 2");
  if (!(cfg.friction_step > 0.0) || !std::isfinite(cfg.friction_step))
    throw_config("friction_step must be positive");
  if (cfg.x0.q.empty() || cfg.x0.q.size() != cfg.x0.p.size())
    throw_config("x0 needs position and momentum of equal positive dimension");
  if (cfg.replicates > std::numeric_limits<std::uint32_t>::max())
    throw_config("too many replicates");
  const double fast = static_cast<double>(cfg.n_grid) * static_cast<double>(coupling_substeps(cfg));
  if (fast > kMaxFastSteps) {
    std::ostringstream msg;
    msg << "coupling run needs " << fast << " fast steps per replicate (limit 1e8); "
        << "raise friction_step or lower gamma^2 T";
    throw_config(msg.str());
  }
}

double CoupledPaths::t(std::size_t k) const {
  if (k == n_grid) return T;
  return T * static_cast<double>(k) / static_cast<double>(n_grid);
}

CoupledPaths simulate_coupled(const CouplingConfig& cfg, const ForceField& field,
                              const PhysParams& params, std::size_t replicate) {
  validate(cfg);
  const std::size_t d = cfg.x0.dim();
  const std::size_t n = cfg.n_grid;
  const std::size_t n_sub = coupling_substeps(cfg);
  const double gamma = cfg.gamma;
  const double beta = params.beta();
  const double slow_dt = cfg.T / static_cast<double>(n);
  const double delta = gamma * slow_dt / static_cast<double>(n_sub);
  const double sqrt_delta = std::sqrt(delta);
  const double noise = std::sqrt(2.0 * gamma / beta);
  const double decay = std::exp(-gamma * delta);
  const double inv_sqrt_gamma = 1.0 / std::sqrt(gamma);
  const double slow_noise = std::sqrt(2.0 / beta);

  CoupledPaths out;
  out.dim = d;
  out.n_grid = n;
  out.T = cfg.T;
  out.gamma = gamma;
  for (auto* v : {&out.q, &out.p, &out.b_gamma, &out.y, &out.qbar}) v->assign((n + 1) * d, 0.0);

  std::vector<double> q = cfg.x0.q, p = cfg.x0.p, y(d, 0.0), b(d, 0.0), qbar = cfg.x0.q;
  std::vector<double> f(d), fbar(d), db(d);
  auto record = [&](std::size_t k) {
    for (std::size_t i = 0; i < d; ++i) {
      out.q[k * d + i] = q[i];
      out.p[k * d + i] = p[i];
      out.y[k * d + i] = y[i];
      out.b_gamma[k * d + i] = b[i] * inv_sqrt_gamma;
      out.qbar[k * d + i] = qbar[i];
    }
  };
  record(0);

  RandomStream rng(cfg.seed, StreamComponent::coupling, cfg.sub_id,
                   static_cast<std::uint32_t>(replicate));
  const bool exponential = cfg.friction == FrictionUpdate::exponential;
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t j = 0; j < n_sub; ++j) {
      field.force(q, f);
      for (std::size_t i = 0; i < d; ++i) {
        const double inc = sqrt_delta * rng.normal();
        db[i] += inc;
        q[i] += p[i] * delta;
        if (exponential)
          p[i] = decay * p[i] + f[i] * delta + noise * inc;
        else
          p[i] += (f[i] - gamma * p[i]) * delta + noise * inc;
        y[i] = decay * y[i] + noise * inc;
      }
    }
    field.force(qbar, fbar);
    for (std::size_t i = 0; i < d; ++i) {
      b[i] += db[i];
      qbar[i] += fbar[i] * slow_dt + slow_noise * db[i] * inv_sqrt_gamma;
    }
    record(k + 1);
  }
  out.y_terminal = y;
  return out;
}

std::vector<double> build_w(const CoupledPaths& paths, const CouplingConfig& cfg,
                            const ForceField& field, const PhysParams& params) {
  const std::size_t d = paths.dim;
  const std::size_t n = paths.n_grid;
  if (paths.y_terminal.size() != d || paths.b_gamma.size() != (n + 1) * d)
    throw std::logic_error("build_w: paths lack the terminal Y value");
  const double beta = params.beta();
  const double slow_dt = paths.T / static_cast<double>(n);
  const double slow_noise = std::sqrt(2.0 / beta);
  std::vector<double> w((n + 1) * d);
  std::vector<double> cur(paths.q.begin(), paths.q.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> f(d);
  std::copy(cur.begin(), cur.end(), w.begin());
  double h_prev = h_T(0.0, cfg.gamma, paths.T);
  for (std::size_t k = 0; k < n; ++k) {
    const double h_next = h_T(paths.t(k + 1), cfg.gamma, paths.T);
    field.force(cur, f);
    for (std::size_t i = 0; i < d; ++i) {
      const double dbg = paths.b_gamma[(k + 1) * d + i] - paths.b_gamma[k * d + i];
      const double dz = slow_noise * dbg - (h_next - h_prev) * paths.y_terminal[i];
      cur[i] += f[i] * slow_dt + dz;
      w[(k + 1) * d + i] = cur[i];
    }
    h_prev = h_next;
  }
  return w;
}

std::vector<double> z_at(const CoupledPaths& paths, std::size_t k, double beta) {
  if (k > paths.n_grid) throw_input("z_at: grid index out of range");
  const double h = h_T(paths.t(k), paths.gamma, paths.T);
  const double slow_noise = std::sqrt(2.0 / beta);
  std::vector<double> z(paths.dim);
  for (std::size_t i = 0; i < paths.dim; ++i)
    z[i] = slow_noise * paths.b_gamma[k * paths.dim + i] - h * paths.y_terminal[i];
  return z;
}

namespace {

struct ReplicateSummary {
  double sup_qw = 0.0;
  double sup_wbar = 0.0;
  std::vector<double> z;  // kCorrTimes x d
  std::vector<double> y_T, p_T, q_T, b_T;
};

double sup_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size() / d; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = a[k * d + i] - b[k * d + i];
      s += diff * diff;
    }
    sup = std::max(sup, std::sqrt(s));
  }
  return sup;
}

}  // namespace

CouplingReport coupling_experiment(const CouplingConfig& cfg, const ForceField& field,
                                   const PhysParams& params, std::size_t threads) {
  validate(cfg);
  const std::size_t d = cfg.x0.dim();
  const std::size_t R = cfg.replicates;
  const double beta = params.beta();
  std::vector<ReplicateSummary> reps(R);
  parallel_for(R, threads, [&](std::size_t r) {
    const CoupledPaths paths = simulate_coupled(cfg, field, params, r);
    const std::vector<double> w = build_w(paths, cfg, field, params);
    ReplicateSummary& s = reps[r];
    s.sup_qw = sup_diff(paths.q, w, d);
    s.sup_wbar = sup_diff(w, paths.qbar, d);
    for (std::size_t i = 1; i <= kCorrTimes; ++i) {
      const std::size_t k = static_cast<std::size_t>(
          std::llround(static_cast<double>(i * cfg.n_grid) / static_cast<double>(kCorrTimes)));
      const std::vector<double> z = z_at(paths, k, beta);
      s.z.insert(s.z.end(), z.begin(), z.end());
    }
    const std::size_t last = cfg.n_grid * d;
    s.y_T = paths.y_terminal;
    s.p_T.assign(paths.p.begin() + static_cast<std::ptrdiff_t>(last), paths.p.end());
    s.q_T.assign(paths.q.begin() + static_cast<std::ptrdiff_t>(last), paths.q.end());
    s.b_T.assign(paths.b_gamma.begin() + static_cast<std::ptrdiff_t>(last), paths.b_gamma.end());
  });

  CouplingReport rep;
  rep.gamma = cfg.gamma;
  rep.T = cfg.T;
  rep.replicates = R;
  rep.seed = cfg.seed;
  std::vector<double> sup_qw(R), sup_wbar(R);
  std::vector<double> y_all, p_all, q_all, b_all;
  for (std::size_t r = 0; r < R; ++r) {
    sup_qw[r] = reps[r].sup_qw;
    sup_wbar[r] = reps[r].sup_wbar;
    y_all.insert(y_all.end(), reps[r].y_T.begin(), reps[r].y_T.end());
    p_all.insert(p_all.end(), reps[r].p_T.begin(), reps[r].p_T.end());
    q_all.insert(q_all.end(), reps[r].q_T.begin(), reps[r].q_T.end());
    b_all.insert(b_all.end(), reps[r].b_T.begin(), reps[r].b_T.end());
  }
  const BatchEstimate qw = batch_estimate(sup_qw);
  const BatchEstimate wb = batch_estimate(sup_wbar);
  rep.sup_qw_mean = qw.mean;
  rep.sup_qw_stderr = qw.stderr_;
  rep.sup_wbar_mean = wb.mean;
  rep.sup_wbar_stderr = wb.stderr_;

  std::vector<double> za(R), yb(R);
  for (std::size_t i = 0; i < kCorrTimes; ++i) {
    std::vector<double> row(d * d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        for (std::size_t r = 0; r < R; ++r) {
          za[r] = reps[r].z[i * d + a];
          yb[r] = reps[r].y_T[b];
        }
        row[a * d + b] = correlation(za, yb);
        rep.max_abs_corr_zy = std::max(rep.max_abs_corr_zy, std::abs(row[a * d + b]));
      }
    }
    rep.corr_zy.push_back(std::move(row));
  }

  const Moments pm = summarize(p_all);
  rep.pT_mean = pm.mean;
  rep.pT_var = pm.variance;
  rep.qp_terminal_corr = correlation(q_all, p_all);
  const Moments ym = summarize(y_all);
  rep.yT_var = ym.variance;
  rep.yT_skew = ym.skewness;
  rep.yT_exkurt = ym.excess_kurtosis;
  rep.yT_var_expected = -std::expm1(-2.0 * cfg.gamma * cfg.gamma * cfg.T) / beta;
  rep.bT_var = summarize(b_all).variance;
  return rep;
}

std::vector<CouplingReport> coupling_sweep(std::span<const double> gammas,
                                           const CouplingConfig& base, const ForceField& field,
                                           const PhysParams& params, std::size_t threads) {
  if (gammas.empty()) throw_config("gamma list is empty");
  std::vector<CouplingReport> out;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    CouplingConfig cfg = base;
    cfg.gamma = gammas[g];
    cfg.sub_id = static_cast<std::uint32_t>(g);
    out.push_back(coupling_experiment(cfg, field, params, threads));
  }
  return out;
}

}  // namespace qsdlab
