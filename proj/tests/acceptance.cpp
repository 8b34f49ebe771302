// Acceptance checks, one line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qsdlab/config.hpp"
#include "qsdlab/coupling.hpp"
#include "qsdlab/dynamics.hpp"
#include "qsdlab/experiments.hpp"
#include "qsdlab/kinetic_kernels.hpp"
#include "qsdlab/oracle.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/qsd.hpp"
#include "qsdlab/random.hpp"
#include "qsdlab/statistics.hpp"

using namespace qsdlab;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLambdaFree = kPi * kPi / 4.0;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " (!)");
  }
};

std::string fmt(double x) { return format_double(x); }

std::size_t threads() { return std::max<std::size_t>(1, default_thread_count()); }

// ---------------------------------------------------------------------------

Verdict kernel_closed_forms() {
  Verdict v;
  const PhysParams params(1.0, 1.0);
  const State x0({0.0}, {1.0});
  const KernelMoments m = kernel_moments(1.0, params, 1.0, x0);
  const double ref[5] = {0.6321206, 0.3678794, 0.3361825, 0.3995764, 0.8646647};
  const double exact[5] = {m.m_q[0], m.m_p[0], m.c_qq, m.c_qp, m.c_pp};
  for (int i = 0; i < 5; ++i)
    if (std::abs(exact[i] - ref[i]) > 5e-7) v.require(false, "closed form " + std::to_string(i));

  const std::size_t n = 100000;
  RandomStream rng(1, StreamComponent::kernels, 0, 0);
  std::vector<double> q(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State x = kernel_sample(1.0, params, 1.0, x0, rng);
    q[i] = x.q[0];
    p[i] = x.p[0];
  }
  const Moments mq = summarize(q);
  const Moments mp = summarize(p);
  // Centred products and their spreads give the CLT errors of the second moments.
  std::vector<double> sqq(n), sqp(n), spp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = q[i] - ref[0], b = p[i] - ref[1];
    sqq[i] = a * a;
    sqp[i] = a * b;
    spp[i] = b * b;
  }
  const double rn = std::sqrt(static_cast<double>(n));
  const Moments cqq = summarize(sqq), cqp = summarize(sqp), cpp = summarize(spp);
  double worst = 0.0;
  const double z[5] = {(mq.mean - ref[0]) / std::sqrt(mq.variance / n),
                       (mp.mean - ref[1]) / std::sqrt(mp.variance / n),
                       (cqq.mean - ref[2]) / (std::sqrt(cqq.variance) / rn),
                       (cqp.mean - ref[3]) / (std::sqrt(cqp.variance) / rn),
                       (cpp.mean - ref[4]) / (std::sqrt(cpp.variance) / rn)};
  for (double zi : z) worst = std::max(worst, std::abs(zi));
  v.require(worst <= 4.0, "max |z| " + fmt(worst));

  double max_rel = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double rho = std::pow(10.0, -6.0 + 9.0 * i / 999.0);
    const double f1 = phi1(rho);
    const double rhs = 4.0 * phi2(rho) * phi1(2.0 * rho) - 3.0 * f1 * f1 * f1 * f1;
    max_rel = std::max(max_rel, std::abs(phi_fn(rho) - rhs) / std::abs(rhs));
  }
  v.require(max_rel <= 1e-10, "phi identity max rel " + fmt(max_rel));
  return v;
}

Verdict asymptotic_identities() {
  Verdict v;
  const double g = 1000.0, t = 1.0;
  const double rho = g * g * t;
  const double a = std::pow(g, 6) * std::pow(t, 4) * phi_fn(rho) - 6.0 * t;
  const double b = t * t * t * std::pow(g, 4) * phi2(rho) - 3.0 * t;
  v.require(std::abs(a) <= 1e-4, "|g^6 t^4 phi - 6t| " + fmt(std::abs(a)));
  v.require(std::abs(b) <= 1e-5, "|t^3 g^4 Phi2 - 3t| " + fmt(std::abs(b)));
  return v;
}

Verdict oracle_correctness() {
  Verdict v;
  const ForceField zero = builtin_force(FieldSpec::zero(), 3.0);
  const EigenPair e = oracle_qsd(zero, 1.0, Interval1D{-1.0, 1.0}, 2000);
  v.require(std::abs(e.lambda0 - kLambdaFree) <= 1e-3, "lambda0 " + fmt(e.lambda0));
  double max_err = 0.0;
  for (std::size_t i = 0; i < e.grid.n; ++i) {
    const double q = e.grid.node(i);
    max_err = std::max(max_err, std::abs(e.psi[i] - kPi / 4.0 * std::cos(kPi * q / 2.0)));
  }
  v.require(max_err <= 1e-3, "max node error " + fmt(max_err));
  std::vector<double> lh, le;
  for (std::size_t n : {63u, 127u, 255u, 511u}) {
    const EigenPair f = oracle_qsd(zero, 1.0, Interval1D{-1.0, 1.0}, n);
    lh.push_back(std::log(f.grid.h()));
    le.push_back(std::log(std::abs(f.lambda0 - kLambdaFree)));
  }
  // Least-squares slope of log error against log h.
  const double mh = (lh[0] + lh[1] + lh[2] + lh[3]) / 4.0;
  const double me = (le[0] + le[1] + le[2] + le[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lh[i] - mh) * (le[i] - me);
    sxx += (lh[i] - mh) * (lh[i] - mh);
  }
  const double slope = sxy / sxx;
  v.require(slope >= 1.8 && slope <= 2.2, "convergence slope " + fmt(slope));
  return v;
}

Verdict overdamped_qsd() {
  Verdict v;
  const Domain domain = Domain::interval(-1.0, 1.0);
  const ForceField zero = builtin_force(FieldSpec::zero(), 3.0);
  const PhysParams params(1.0, 1.0);
  const GridDensity psi = oracle_qsd(zero, 1.0, domain.as_interval()).density();

  FvConfig fv;
  fv.process = ProcessSpec::overdamped(true);
  fv.N = 2000;
  fv.T = 20.0;
  fv.dt = 1e-3;
  fv.burn_in = 10.0;
  fv.snapshot_stride = 100;
  fv.seed = 7;
  const QsdEstimate est = fleming_viot(domain, zero, params, fv);
  const double rel = std::abs(est.lambda0_hat - kLambdaFree) / kLambdaFree;
  v.require(rel <= 0.10, "lambda0_hat " + fmt(est.lambda0_hat));
  const double w1 = wasserstein1_1d(est.position_samples.values, psi);
  v.require(w1 <= 0.05, "W1 " + fmt(w1));

  RandomStream rng(7, StreamComponent::sampling, 0, 0);
  const std::vector<State> starts = sample_states(psi, 1.0, 10000, rng);
  ExitProbeConfig probe;
  probe.process = ProcessSpec::overdamped(true);
  probe.dt = 1e-4;
  probe.horizon = 10.0;
  probe.seed = 7;
  probe.threads = threads();
  const ExitLawStats ex = exit_law_probe(starts, domain, zero, params, probe);
  const double mean_ref = 0.4053;
  v.require(std::abs(ex.mean_exit - mean_ref) <= 0.05 * mean_ref, "mean exit " + fmt(ex.mean_exit));
  v.require(ex.ks_stat <= 0.02, "KS " + fmt(ex.ks_stat));
  return v;
}

Verdict gamma_limit() {
  Verdict v;
  const Domain domain = Domain::interval(-1.0, 1.0);
  const ForceField zero = builtin_force(FieldSpec::zero(), 3.0);
  SweepConfig cfg;
  cfg.N = 2000;
  cfg.T = 10.0;
  cfg.dt = 1e-3;
  cfg.burn_in = 5.0;
  cfg.snapshot_stride = 100;
  cfg.seed = 11;
  cfg.threads = threads();
  const std::vector<double> gammas{4.0, 16.0, 64.0};
  const auto rows = gamma_sweep(gammas, domain, zero, 1.0, cfg);
  const SweepRow& top = rows.back();
  const double rel = std::abs(top.lambda0_rescaled - kLambdaFree) / kLambdaFree;
  v.require(rel <= 0.15, "lambda0(64) " + fmt(top.lambda0_rescaled));
  v.require(std::abs(top.p_mean) <= 0.02, "p mean " + fmt(top.p_mean));
  v.require(std::abs(top.p_var - 1.0) <= 0.05, "p var " + fmt(top.p_var));
  bool monotone = true;
  std::string w1s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    w1s += (i ? "," : "") + fmt(rows[i].w1_position);
    if (i > 0 && rows[i].w1_position > rows[i - 1].w1_position + rows[i].w1_stderr)
      monotone = false;
  }
  v.require(monotone, "W1 " + w1s);
  return v;
}

Verdict coupling_rates() {
  Verdict v;
  const ForceField dw = builtin_force(FieldSpec::double_well(1.0), 5.0);
  CouplingConfig cfg;
  cfg.T = 1.0;
  cfg.replicates = 200;
  cfg.n_grid = 10000;
  cfg.seed = 13;
  const std::vector<double> gammas{10.0, 40.0, 160.0};
  const auto reports = coupling_sweep(gammas, cfg, dw, PhysParams(1.0, 1.0), threads());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::string sups, wbars;
  bool decreasing = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double x = std::log(gammas[i]);
    const double y = std::log(reports[i].sup_qw_mean);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    sups += (i ? "," : "") + fmt(reports[i].sup_qw_mean);
    wbars += (i ? "," : "") + fmt(reports[i].sup_wbar_mean);
    if (i > 0 && !(reports[i].sup_wbar_mean < reports[i - 1].sup_wbar_mean)) decreasing = false;
  }
  const double n = static_cast<double>(reports.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  v.require(slope >= -1.2 && slope <= -0.7, "slope " + fmt(slope) + " sup|q-w| " + sups);
  v.require(decreasing, "sup|w-qbar| " + wbars);
  return v;
}

Verdict independence() {
  Verdict v;
  const ForceField dw = builtin_force(FieldSpec::double_well(1.0), 5.0);
  CouplingConfig cfg;
  cfg.gamma = 10.0;
  cfg.T = 1.0;
  cfg.replicates = 10000;
  cfg.n_grid = 1000;
  cfg.friction_step = 0.005;
  cfg.seed = 17;
  const double beta = 1.0;
  const CouplingReport r = coupling_experiment(cfg, dw, PhysParams(beta, 1.0), threads());
  v.require(r.max_abs_corr_zy <= 0.05, "max |corr(Z, Y_T)| " + fmt(r.max_abs_corr_zy));
  const double expected = -std::expm1(-2.0 * cfg.gamma * cfg.gamma * cfg.T) / beta;
  // Var of the sample variance of a Gaussian: 2 sigma^4 / (n - 1).
  const double se = expected * std::sqrt(2.0 / static_cast<double>(cfg.replicates - 1));
  v.require(std::abs(r.yT_var - expected) <= 3.0 * se,
            "Var Y_T " + fmt(r.yT_var) + " vs " + fmt(expected));
  return v;
}

Verdict gibbs_stationarity() {
  Verdict v;
  const ForceField harm = builtin_force(FieldSpec::harmonic(1.0), 10.0);
  IntegratorConfig ic;
  ic.dt = 0.01;
  ic.scheme = Scheme::splitting_langevin;
  const double beta = 1.0;
  RandomStream rng(19, StreamComponent::gibbs, 0, 0);
  const GibbsReport g = gibbs_probe(harm, PhysParams(beta, 1.0), ic, 10000000, 10000,
                                    State({0.0}, {0.0}), rng);
  v.require(std::abs(g.q_var * beta - 1.0) <= 0.03, "Var q " + fmt(g.q_var));
  v.require(std::abs(g.p_var * beta - 1.0) <= 0.03, "Var p " + fmt(g.p_var));
  v.require(std::abs(g.qp_corr) <= 0.02, "corr " + fmt(g.qp_corr));
  return v;
}

Verdict determinism() {
  Verdict v;
  const std::vector<std::pair<Experiment, std::string>> cases = {
      {Experiment::kernels_check, "[run]\nkernel_samples = 2000\n"},
      {Experiment::oracle, "[run]\noracle_n = 500\n"},
      {Experiment::fv, "[run]\nN = 100\nT = 1\nburn_in = 0.5\nsnapshot_stride = 50\n"
                       "bridge = true\noracle_n = 500\n"},
      {Experiment::sweep, "[run]\ngammas = [2, 8, 32]\nN = 60\nT = 0.5\nburn_in = 0.25\n"
                          "snapshot_stride = 50\noracle_n = 500\n"},
      {Experiment::coupling, "[field]\nkind = \"double_well\"\n[run]\ngammas = [10, 40]\n"
                             "replicates = 40\nn_grid = 500\n"},
      {Experiment::exit_law, "[run]\nruns = 300\nhorizon = 5\noracle_n = 500\n"},
      {Experiment::gibbs, "[field]\nkind = \"harmonic\"\n[run]\nn_steps = 20000\n"},
  };
  for (const auto& [experiment, text] : cases) {
    const RunConfig cfg = parse_config(text, experiment);
    const ExperimentOutput a = run_experiment(cfg, 1);
    const ExperimentOutput b = run_experiment(cfg, 3);
    const ExperimentOutput c = run_experiment(cfg, 1);
    v.require(a.csv == b.csv && a.csv == c.csv && a.rows > 0, to_string(experiment));
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"C1 kernel closed forms", kernel_closed_forms},
      {"C2 large-gamma identities", asymptotic_identities},
      {"C3 oracle correctness", oracle_correctness},
      {"C4 overdamped QSD estimation", overdamped_qsd},
      {"C5 gamma sweep limit", gamma_limit},
      {"C6 coupling rates", coupling_rates},
      {"C7 Z, Y_T independence", independence},
      {"C8 Gibbs stationarity", gibbs_stationarity},
      {"C9 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
