#include "qsdlab/experiments.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qsdlab/coupling.hpp"
#include "qsdlab/dynamics.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/kinetic_kernels.hpp"
#include "qsdlab/oracle.hpp"
#include "qsdlab/qsd.hpp"
#include "qsdlab/statistics.hpp"

namespace qsdlab {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

class CsvBuilder {
 public:
  CsvBuilder(const RunConfig& cfg, const std::string& header) {
    text_ = "# seed=" + std::to_string(cfg.seed) + " config_hash=" + config_hash(cfg) + "\n";
    text_ += header + "\n";
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::string line;
    ((line += (line.empty() ? "" : ",") + cell(cells)), ...);
    text_ += line + "\n";
    ++rows_;
  }

  std::string text() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }

  std::string text_;
  std::size_t rows_ = 0;
};

std::optional<Domain> domain_for(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::oracle:
    case Experiment::fv:
    case Experiment::sweep:
    case Experiment::exit_law:
      return cfg.domain;
    default:
      return std::nullopt;
  }
}

ForceField field_for(const RunConfig& cfg) {
  return builtin_force(cfg.field, cfg.clamp_radius, domain_for(cfg));
}

std::string describe(double x) { return format_double(x); }

// ---------------------------------------------------------------------------

ExperimentOutput kernels_check(const RunConfig& cfg) {
  CsvBuilder csv(cfg, "name,input,expected,got,rel_err,pass");
  std::size_t passed = 0;
  auto add = [&](const std::string& name, const std::string& input, double expected, double got,
                 bool pass) {
    const double err =
        expected != 0.0 ? std::abs(got - expected) / std::abs(expected) : std::abs(got - expected);
    csv.row(name, input, expected, got, err, pass);
    if (pass) ++passed;
  };
  auto rel_close = [](double expected, double got, double tol) {
    return std::abs(got - expected) <= tol * std::abs(expected);
  };

  add("phi1", "rho=1", 0.6321205588285577, phi1(1.0), rel_close(0.6321205588285577, phi1(1.0), 1e-14));
  add("phi1", "rho=-1", 1.718281828459045, phi1(-1.0), rel_close(1.718281828459045, phi1(-1.0), 1e-14));
  add("phi2", "rho=1", 0.5042737221737349, phi2(1.0), rel_close(0.5042737221737349, phi2(1.0), 1e-13));
  add("phi_fn", "rho=1", 0.3930714898555873, phi_fn(1.0),
      rel_close(0.3930714898555873, phi_fn(1.0), 1e-13));

  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double rho = std::pow(10.0, -6.0 + 8.0 * i / 999.0);
    const double f1 = phi1(rho);
    const double rhs = 4.0 * phi2(rho) * phi1(2.0 * rho) - 3.0 * f1 * f1 * f1 * f1;
    worst = std::max(worst, std::abs(phi_fn(rho) - rhs) / std::abs(phi_fn(rho)));
  }
  add("phi_identity_max_rel_err", "rho=1e-6..1e2;points=1000", 0.0, worst, worst <= 1e-10);

  const double g = 1000.0;
  const double lim6 = std::pow(g, 6) * phi_fn(g * g);
  const double lim4 = std::pow(g, 4) * phi2(g * g);
  add("gamma6_phi_limit", "gamma=1000;t=1", 6.0, lim6, std::abs(lim6 - 6.0) <= 1e-4);
  add("gamma4_phi2_limit", "gamma=1000;t=1", 3.0, lim4, std::abs(lim4 - 3.0) <= 1e-5);

  const PhysParams params(cfg.beta, cfg.gamma);
  const double t = cfg.kernel_t;
  std::ostringstream in;
  in << "gamma=" << describe(cfg.gamma) << ";beta=" << describe(cfg.beta) << ";t=" << describe(t)
     << ";alpha=" << describe(cfg.alpha);
  const std::string input = in.str();
  const CovDeterminant det = det_cov(t, params, cfg.alpha, 1);
  add("block_det", input, det.block_phi, det.block, rel_close(det.block_phi, det.block, 1e-10));

  const State x0({0.0}, {1.0});
  const KernelMoments m = kernel_moments(t, params, cfg.alpha, x0);
  const KineticFlow flow(t, params, cfg.alpha);
  RandomStream rng(cfg.seed, StreamComponent::kernels, 0, 0);
  const std::size_t n = cfg.kernel_samples;
  std::vector<double> qs(n), ps(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> q{0.0}, p{1.0};
    flow.apply(q, p, rng);
    qs[i] = q[0];
    ps[i] = p[0];
  }
  const Moments mq = summarize(qs);
  const Moments mp = summarize(ps);
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) cov += (qs[i] - mq.mean) * (ps[i] - mp.mean);
  cov /= static_cast<double>(n - 1);
  const double nd = static_cast<double>(n);
  auto within = [](double expected, double got, double se) {
    return std::abs(got - expected) <= 4.0 * se;
  };
  const std::string sampled = input + ";x0=(0,1);n=" + std::to_string(n);
  add("m_q", sampled, m.m_q[0], mq.mean, within(m.m_q[0], mq.mean, std::sqrt(m.c_qq / nd)));
  add("m_p", sampled, m.m_p[0], mp.mean, within(m.m_p[0], mp.mean, std::sqrt(m.c_pp / nd)));
  add("c_qq", sampled, m.c_qq, mq.variance, within(m.c_qq, mq.variance, m.c_qq * std::sqrt(2.0 / nd)));
  add("c_qp", sampled, m.c_qp, cov,
      within(m.c_qp, cov, std::sqrt((m.c_qq * m.c_pp + m.c_qp * m.c_qp) / nd)));
  add("c_pp", sampled, m.c_pp, mp.variance, within(m.c_pp, mp.variance, m.c_pp * std::sqrt(2.0 / nd)));

  const double ub_alpha = cfg.alpha < 1.0 ? cfg.alpha : 0.5;
  const double zero_force = ub_series_prefactor(t, params, UpperBoundParams(ub_alpha, cfg.c_alpha, 0.0), 1);
  const double zero_expected = 1.0 / (std::sqrt(std::numbers::pi) * ub_alpha);
  add("ub_series_zero_force", input, zero_expected, zero_force,
      rel_close(zero_expected, zero_force, 1e-14));
  const double x = cfg.c_alpha * std::sqrt(std::numbers::pi * t) / std::sqrt(params.sigma2());
  const double closed =
      (1.0 / std::sqrt(std::numbers::pi) + x * std::exp(x * x) * (1.0 + std::erf(x))) / ub_alpha;
  const double series = ub_series_prefactor(t, params, UpperBoundParams(ub_alpha, cfg.c_alpha, 1.0), 1);
  add("ub_series_unit_force", input, closed, series, rel_close(closed, series, 1e-10));
  add("h_T", "t=1;gamma=2;T=1", 0.9820137900379084, h_T(1.0, 2.0, 1.0),
      rel_close(0.9820137900379084, h_T(1.0, 2.0, 1.0), 1e-14));

  std::ostringstream summary;
  summary << "kernels_check: " << passed << " of " << csv.rows() << " checks passed";
  return {csv.text(), summary.str(), csv.rows()};
}

ExperimentOutput oracle_run(const RunConfig& cfg) {
  const ForceField field = field_for(cfg);
  const EigenPair pair = oracle_qsd(field, cfg.beta, cfg.domain.as_interval(), cfg.oracle_n);
  CsvBuilder csv(cfg, "q,psi");
  for (std::size_t i = 0; i < pair.grid.n; ++i) csv.row(pair.grid.node(i), pair.psi[i]);
  std::ostringstream summary;
  summary << "oracle: lambda0=" << format_double(pair.lambda0) << " on " << pair.grid.n
          << " nodes (residual " << format_double(pair.residual) << ")";
  return {csv.text(), summary.str(), csv.rows()};
}

const char* kSweepHeader =
    "gamma,N,T,dt,lambda0_rescaled,lambda0_stderr,w1_position,p_mean,p_var,p_skew,p_exkurt,"
    "branch_events,seed";

void sweep_row(CsvBuilder& csv, const SweepRow& r) {
  csv.row(r.gamma, r.N, r.T, r.dt, r.lambda0_rescaled, r.lambda0_stderr, r.w1_position, r.p_mean,
          r.p_var, r.p_skew, r.p_exkurt, static_cast<std::size_t>(r.branch_events),
          static_cast<std::size_t>(r.seed));
}

ExperimentOutput fv_run(const RunConfig& cfg) {
  const ForceField field = field_for(cfg);
  FvConfig fv;
  fv.process = cfg.scheme == FvKind::langevin ? ProcessSpec::langevin(cfg.gamma)
                                              : ProcessSpec::overdamped(cfg.bridge);
  fv.N = cfg.N;
  fv.T = cfg.T;
  fv.dt = cfg.dt;
  fv.burn_in = cfg.burn_in;
  fv.snapshot_stride = cfg.snapshot_stride;
  fv.seed = cfg.seed;
  const QsdEstimate est = fleming_viot(cfg.domain, field, PhysParams(cfg.beta, cfg.gamma), fv);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepRow row;
  row.gamma = est.gamma;
  row.N = cfg.N;
  row.T = cfg.T;
  row.dt = cfg.dt;
  row.lambda0_rescaled = est.lambda0_hat;
  row.lambda0_stderr = est.lambda0_stderr;
  row.branch_events = est.post_burn_in_events;
  row.seed = cfg.seed;
  row.w1_position = nan;
  if (cfg.domain.is_interval()) {
    const EigenPair pair = oracle_qsd(field, cfg.beta, cfg.domain.as_interval(), cfg.oracle_n);
    row.w1_position = wasserstein1_1d(est.position_samples.coordinate(0), pair.density());
  }
  row.p_mean = row.p_var = row.p_skew = row.p_exkurt = nan;
  if (cfg.scheme == FvKind::langevin) {
    const MomentumReport mom = momentum_gaussianity(est.momentum_samples, cfg.beta);
    row.p_mean = mom.pooled.mean;
    row.p_var = mom.pooled.variance;
    row.p_skew = mom.pooled.skewness;
    row.p_exkurt = mom.pooled.excess_kurtosis;
  }
  CsvBuilder csv(cfg, kSweepHeader);
  sweep_row(csv, row);
  std::ostringstream summary;
  summary << "fv: lambda0_hat=" << format_double(est.lambda0_hat) << " +- "
          << format_double(est.lambda0_stderr) << " from " << est.post_burn_in_events
          << " branch events";
  return {csv.text(), summary.str(), csv.rows()};
}

ExperimentOutput sweep_run(const RunConfig& cfg, std::size_t threads) {
  const ForceField field = field_for(cfg);
  SweepConfig sc;
  sc.N = cfg.N;
  sc.T = cfg.T;
  sc.dt = cfg.dt;
  sc.burn_in = cfg.burn_in;
  sc.snapshot_stride = cfg.snapshot_stride;
  sc.seed = cfg.seed;
  sc.oracle_n = cfg.oracle_n;
  sc.threads = threads;
  const std::vector<SweepRow> rows = gamma_sweep(cfg.gammas, cfg.domain, field, cfg.beta, sc);
  CsvBuilder csv(cfg, kSweepHeader);
  for (const SweepRow& r : rows) sweep_row(csv, r);
  std::ostringstream summary;
  summary << "sweep: " << rows.size() << " gamma values, lambda0_rescaled at gamma="
          << format_double(rows.back().gamma) << " is " << format_double(rows.back().lambda0_rescaled);
  return {csv.text(), summary.str(), csv.rows()};
}

ExperimentOutput coupling_run(const RunConfig& cfg, std::size_t threads) {
  const ForceField field = field_for(cfg);
  CouplingConfig base;
  base.T = cfg.T;
  base.n_grid = cfg.n_grid;
  base.x0 = State(cfg.x0_q, cfg.x0_p);
  base.replicates = cfg.replicates;
  base.seed = cfg.seed;
  base.friction_step = cfg.friction_step;
  base.friction = cfg.friction;
  const auto reports = coupling_sweep(cfg.gammas, base, field, PhysParams(cfg.beta, 1.0), threads);
  CsvBuilder csv(cfg,
                 "gamma,T,replicates,sup_qw_mean,sup_qw_stderr,sup_wbar_mean,max_abs_corr_zy,"
                 "pT_mean,pT_var,qp_terminal_corr,seed");
  for (const CouplingReport& r : reports)
    csv.row(r.gamma, r.T, r.replicates, r.sup_qw_mean, r.sup_qw_stderr, r.sup_wbar_mean,
            r.max_abs_corr_zy, r.pT_mean, r.pT_var, r.qp_terminal_corr,
            static_cast<std::size_t>(r.seed));
  std::ostringstream summary;
  summary << "coupling: " << reports.size() << " gamma values, sup|q-w| mean at gamma="
          << format_double(reports.back().gamma) << " is "
          << format_double(reports.back().sup_qw_mean);
  return {csv.text(), summary.str(), csv.rows()};
}

ExperimentOutput exit_law_run(const RunConfig& cfg, std::size_t threads) {
  const ForceField field = field_for(cfg);
  std::vector<State> starts;
  if (cfg.start == "oracle") {
    const EigenPair pair = oracle_qsd(field, cfg.beta, cfg.domain.as_interval(), cfg.oracle_n);
    RandomStream rng(cfg.seed, StreamComponent::sampling, 0, 0);
    starts = sample_states(pair.density(), cfg.beta, cfg.runs, rng);
  } else {
    starts.assign(cfg.runs, State::at_rest(cfg.start_q));
  }
  ExitProbeConfig pc;
  pc.process = cfg.scheme == FvKind::langevin ? ProcessSpec::langevin(cfg.gamma)
                                              : ProcessSpec::overdamped(cfg.bridge);
  pc.dt = cfg.dt;
  pc.horizon = cfg.horizon;
  pc.seed = cfg.seed;
  pc.threads = threads;
  const ExitLawStats st = exit_law_probe(starts, cfg.domain, field, PhysParams(cfg.beta, cfg.gamma), pc);
  CsvBuilder csv(cfg, "n,mean_exit,rate_mle,ks_stat,censored_fraction");
  csv.row(st.n, st.mean_exit, st.rate_mle, st.ks_stat, st.censored_fraction);
  std::ostringstream summary;
  summary << "exit_law: mean exit " << format_double(st.mean_exit) << " over " << st.n
          << " runs, KS " << format_double(st.ks_stat);
  return {csv.text(), summary.str(), csv.rows()};
}

ExperimentOutput gibbs_run(const RunConfig& cfg) {
  const ForceField field = field_for(cfg);
  IntegratorConfig ic;
  ic.dt = cfg.dt;
  ic.scheme = cfg.scheme == FvKind::langevin ? Scheme::splitting_langevin
                                             : Scheme::euler_maruyama_overdamped;
  RandomStream rng(cfg.seed, StreamComponent::gibbs, 0, 0);
  const GibbsReport g = gibbs_probe(field, PhysParams(cfg.beta, cfg.gamma), ic, cfg.n_steps,
                                    cfg.burn_in_steps, State(cfg.x0_q, cfg.x0_p), rng);
  CsvBuilder csv(cfg, "scheme,gamma,n_steps,q_mean,q_var,p_mean,p_var,qp_corr,seed");
  const bool langevin = cfg.scheme == FvKind::langevin;
  csv.row(std::string(langevin ? "langevin" : "overdamped"), langevin ? cfg.gamma : 0.0,
          static_cast<std::size_t>(cfg.n_steps), g.q_mean, g.q_var, g.p_mean, g.p_var, g.qp_corr,
          static_cast<std::size_t>(cfg.seed));
  std::ostringstream summary;
  summary << "gibbs: Var(q)=" << format_double(g.q_var) << " Var(p)=" << format_double(g.p_var)
          << " over " << g.samples << " steps";
  return {csv.text(), summary.str(), csv.rows()};
}

}  // namespace

ExperimentOutput run_experiment(const RunConfig& cfg, std::size_t threads) {
  if (threads == 0) threads = 1;
  switch (cfg.experiment) {
    case Experiment::kernels_check: return kernels_check(cfg);
    case Experiment::oracle: return oracle_run(cfg);
    case Experiment::fv: return fv_run(cfg);
    case Experiment::sweep: return sweep_run(cfg, threads);
    case Experiment::coupling: return coupling_run(cfg, threads);
    case Experiment::exit_law: return exit_law_run(cfg, threads);
    case Experiment::gibbs: return gibbs_run(cfg);
  }
  throw_config("unknown experiment");
}

int run(const RunConfig& cfg, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentOutput result = run_experiment(cfg, options.threads);
    const std::filesystem::path dir = options.out_dir.value_or(cfg.output);
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / (to_string(cfg.experiment) + ".csv");
    std::ofstream file(path, std::ios::binary);
    file << result.csv;
    file.close();
    if (!file) {
      err << "error: could not write " << path.string() << "\n";
      return 1;
    }
    out << result.summary << " -> " << path.string() << "\n";
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qsdlab
