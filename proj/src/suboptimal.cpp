#include "secrate/suboptimal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "lmi_util.hpp"

namespace secrate {

namespace {

using sdp::AffineHermitian;
using sdp::Var;

// Per-receiver block builder: the S-procedure LMI of size N+1, or its
// scalar limit for a receiver with zero radius.
class Block {
 public:
  Block(const ChannelSet& ch, int k) : ch_(ch), k_(k), f_(ch.radius(k) == 0.0 ? 1 : ch.n_tx + 1) {}

  bool scalar() const { return f_.dim() == 1; }
  // coeff * hh X hh^H.
  Block& lift(Var x, double coeff) {
    if (scalar()) {
      f_.add_quad(x, ch_.channels[k_], coeff);
    } else {
      f_.add_congruence(x, lmi::lifted(ch_.channels[k_]), coeff);
    }
    return *this;
  }
  // slack * diag(I, -eps^2); dropped in scalar form.
  Block& slack(const std::optional<Var>& s) {
    if (!scalar()) f_.add_scaled(*s, lmi::border(ch_.n_tx, 1.0, -ch_.radius(k_) * ch_.radius(k_)));
    return *this;
  }
  // x * c on the border entry.
  Block& corner(Var x, double c) {
    f_.add_scaled(x, lmi::corner(f_.dim(), c));
    return *this;
  }
  Block& corner(double c) {
    f_.add_constant(lmi::corner(f_.dim(), c));
    return *this;
  }
  // x * coeff * hh W hh^H for a constant W.
  Block& lift_constant(Var x, const HermitianMatrix& w, double coeff) {
    if (scalar()) {
      f_.add_scaled(x, coeff * w.quad(ch_.channels[k_]));
    } else {
      const CMatrix l = lmi::lifted(ch_.channels[k_]);
      f_.add_scaled(x, coeff * (l * w.matrix() * l.adjoint()));
    }
    return *this;
  }
  AffineHermitian take() { return std::move(f_); }

 private:
  const ChannelSet& ch_;
  int k_;
  AffineHermitian f_;
};

std::optional<Var> slack_for(sdp::Problem& p, const ChannelSet& ch, int k) {
  if (ch.radius(k) == 0.0) return std::nullopt;
  return p.add_nonnegative("s");
}

HermitianMatrix unscaled(const sdp::Solution& s, Var v, double xi) {
  return HermitianMatrix::symmetrized(s.matrix(v).matrix() / xi).clipped();
}

void fill_diagnostics(RatePoint& pt, const ChannelSet& ch) {
  const RankDiagnostics rd = rank_diagnostics(pt.triple);
  pt.diagnostics.rank_ratio_qc = rd.qc;
  pt.diagnostics.rank_ratio_q0 = rd.q0;
  pt.diagnostics.rank_ratio_qa = rd.qa;
  pt.multicast_rate_achieved = exact_worst_case(pt.triple, ch).multicast_rate;
  pt.diagnostics.qoms_slack = pt.multicast_rate_achieved - pt.tau_ms;
}

double beta_max(const SystemConfig& cfg) { return robust_beta_max(cfg); }

// Runs `point` over each target, recording solver errors as failed points.
template <typename PointFn>
RegionResult sweep(const std::string& scheme, double tau_max, long base_calls, const std::vector<double>& taus,
                   int n_tx, PointFn point) {
  RegionResult out;
  out.scheme = scheme;
  out.tau_max = tau_max;
  out.total_solver_calls = base_calls;
  for (double tau : taus) {
    RatePoint pt;
    try {
      pt = point(tau);
    } catch (const std::runtime_error& e) {
      pt.tau_ms = tau;
      pt.tau_prime = std::exp2(tau) - 1.0;
      pt.triple = CovarianceTriple::zero(n_tx);
      pt.status = PointStatus::kFailed;
      pt.message = e.what();
    }
    out.total_solver_calls += pt.diagnostics.solver_calls;
    out.points.push_back(std::move(pt));
  }
  return out;
}

SchemeOptions perfect_options(const RobustSettings& rs, bool an) {
  SchemeOptions opt;
  opt.artificial_noise = an;
  opt.search_mode = rs.search_mode;
  opt.solver = rs.solver;
  return opt;
}

// The perfect-CSI machinery reads eps from the config.
SystemConfig with_eps(SystemConfig cfg, const RobustSettings& rs) {
  cfg.search_epsilon = rs.eps;
  cfg.bisection_tol = rs.bisection_tol();
  return cfg;
}

}  // namespace

std::vector<double> rho_grid(int n) {
  if (n < 2) throw ValidationError("rho grid needs at least two points");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<double>(i) / (n - 1);
  out.back() = 1.0;
  return out;
}

MulticastShare multicast_share(const ChannelSet& ch, double power, const HermitianMatrix& interference,
                               const sdp::Settings& solver) {
  ch.validate(1);
  if (!(power >= 0.0)) throw ValidationError("power must be nonnegative");
  const int n = ch.n_tx;
  MulticastShare out;
  out.q0 = HermitianMatrix::zero(n);
  if (power == 0.0) return out;

  sdp::Problem p;
  const Var q0 = p.add_hermitian_psd(n, "Q0");
  const Var t = p.add_free("t");
  for (int k = 0; k < ch.size(); ++k) {
    const std::optional<Var> d = slack_for(p, ch, k);
    Block b(ch, k);
    b.lift(q0, 1.0).lift_constant(t, interference, -1.0).corner(t, -1.0).slack(d);
    p.add_psd(b.take());
  }
  AffineHermitian budget(1);
  budget.add_constant(power).add_trace(q0, n, -1.0);
  p.add_psd(std::move(budget));
  AffineHermitian obj(1);
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  const sdp::Solution s = sdp::solve(p, solver);
  out.solver_calls = 1;
  if (!s.optimal()) {
    throw std::runtime_error(std::string("multicast share: solver returned ") + sdp::to_string(s.status));
  }
  out.sinr = std::max(0.0, s.objective);
  out.q0 = s.matrix(q0).clipped();
  return out;
}

PowerSplitPoint power_split_point(double rho, const SystemConfig& cfg, bool robust, const RobustSettings& rs) {
  cfg.validate();
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho must lie in [0, 1]");
  const int n = cfg.channels.n_tx;
  PowerSplitPoint out;
  out.rho = rho;
  out.triple = CovarianceTriple::zero(n);

  SystemConfig secret = with_eps(cfg, rs);
  secret.power = rho * cfg.power;
  if (secret.power > 0.0) {
    const RatePoint pt = robust ? robust_qoms_srm(0.0, secret, rs) : qoms_srm(0.0, secret, perfect_options(rs, true));
    out.solver_calls += pt.diagnostics.solver_calls;
    if (pt.status != PointStatus::kOptimal) {
      out.status = pt.status;
      out.message = "secrecy share: " + pt.message;
      return out;
    }
    out.rc = pt.secrecy_rate;
    out.triple.qc = pt.triple.qc;
    out.triple.qa = pt.triple.qa;
  }
  const MulticastShare share =
      multicast_share(cfg.channels, (1.0 - rho) * cfg.power, out.triple.qc + out.triple.qa, rs.solver);
  out.solver_calls += share.solver_calls;
  out.r0 = std::log2(1.0 + share.sinr);
  out.triple.q0 = share.q0;
  out.status = PointStatus::kOptimal;
  return out;
}

RegionResult power_split_region(const SystemConfig& cfg, bool robust, const std::vector<double>& rhos,
                                const RobustSettings& rs) {
  cfg.validate();
  rs.validate();
  const double tau_max =
      robust ? wc_multicast_capacity(cfg, rs.solver).tau_max : multicast_capacity(cfg, rs.solver).tau_max;
  auto point = [&](double rho) {
    const PowerSplitPoint ps = power_split_point(rho, cfg, robust, rs);
    RatePoint pt;
    pt.tau_ms = ps.r0;
    pt.tau_prime = std::exp2(ps.r0) - 1.0;
    pt.secrecy_rate = ps.rc;
    pt.outer_arg = rho;
    pt.triple = ps.triple;
    pt.status = ps.status;
    pt.message = ps.message;
    pt.diagnostics.solver_calls = ps.solver_calls;
    SystemConfig secret = with_eps(cfg, rs);
    secret.power = rho * cfg.power;
    // The secrecy SRM plus the multicast share.
    pt.diagnostics.call_bound =
        (robust ? robust_call_bound(secret, rs) + 2.0 : perfect_call_bound(secret) + 1.0) + 1.0;
    if (pt.status == PointStatus::kOptimal) fill_diagnostics(pt, cfg.channels);
    return pt;
  };
  RegionResult out = sweep(robust ? "power-split-robust" : "power-split", tau_max, 1, rhos, cfg.channels.n_tx, point);
  return out;
}

RatePoint power_split_at(double tau, const SystemConfig& cfg, bool robust, const RobustSettings& rs,
                         double rho_tol) {
  cfg.validate();
  rs.validate();
  if (!(rho_tol > 0.0)) throw ValidationError("rho tolerance must be positive");
  RatePoint pt;
  pt.tau_ms = tau;
  pt.tau_prime = std::exp2(tau) - 1.0;
  pt.triple = CovarianceTriple::zero(cfg.channels.n_tx);
  auto take = [&](const PowerSplitPoint& ps) {
    pt.secrecy_rate = ps.rc;
    pt.outer_arg = ps.rho;
    pt.triple = ps.triple;
    pt.status = PointStatus::kOptimal;
  };
  PowerSplitPoint lo = power_split_point(0.0, cfg, robust, rs);
  pt.diagnostics.solver_calls += lo.solver_calls;
  if (lo.status != PointStatus::kOptimal || lo.r0 < tau - 1e-9) {
    pt.status = lo.status == PointStatus::kOptimal ? PointStatus::kInfeasible : lo.status;
    pt.message = lo.status == PointStatus::kOptimal ? "QoMS target infeasible" : lo.message;
    return pt;
  }
  take(lo);
  double a = 0.0;
  double b = 1.0;
  while (b - a > rho_tol) {
    const double m = 0.5 * (a + b);
    const PowerSplitPoint ps = power_split_point(m, cfg, robust, rs);
    pt.diagnostics.solver_calls += ps.solver_calls;
    if (ps.status == PointStatus::kOptimal && ps.r0 >= tau) {
      a = m;
      take(ps);
    } else {
      b = m;
    }
  }
  if (b == 1.0) {
    const PowerSplitPoint ps = power_split_point(1.0, cfg, robust, rs);
    pt.diagnostics.solver_calls += ps.solver_calls;
    if (ps.status == PointStatus::kOptimal && ps.r0 >= tau) take(ps);
  }
  fill_diagnostics(pt, cfg.channels);
  return pt;
}

LowerBoundSolution lower_bound_inner(double beta, double tau_prime, const SystemConfig& cfg, bool artificial_noise,
                                     const sdp::Settings& solver) {
  cfg.validate();
  if (!(beta >= 1.0) || beta > beta_max(cfg) * (1.0 + 1e-12)) throw ValidationError("beta outside [1, beta_max]");
  if (!(tau_prime >= 0.0)) throw ValidationError("tau' must be nonnegative");
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  const int k_count = ch.size();
  const bool multicast = tau_prime > 0.0;

  LowerBoundSolution out;
  out.beta = beta;
  out.z = out.gamma = out.phi = HermitianMatrix::zero(n);
  out.triple = CovarianceTriple::zero(n);
  sdp::Problem p;
  const Var z = p.add_hermitian_psd(n, "Z");
  std::optional<Var> gamma;
  if (artificial_noise) gamma = p.add_hermitian_psd(n, "Gamma");
  std::optional<Var> phi;
  if (multicast) phi = p.add_hermitian_psd(n, "Phi");
  const Var xi = p.add_nonnegative("xi");
  const Var a = p.add_free("a");
  std::vector<std::optional<Var>> lambda(k_count - 1), mu(k_count);

  for (int k = 1; k < k_count; ++k) {
    lambda[k - 1] = slack_for(p, ch, k);
    Block b(ch, k);
    b.lift(z, -1.0).corner(xi, beta - 1.0).slack(lambda[k - 1]);
    if (gamma) b.lift(*gamma, beta - 1.0);
    p.add_psd(b.take());
  }
  for (int k = 0; multicast && k < k_count; ++k) {
    mu[k] = slack_for(p, ch, k);
    Block b(ch, k);
    b.lift(*phi, 1.0).lift(z, -tau_prime).corner(xi, -tau_prime).slack(mu[k]);
    if (gamma) b.lift(*gamma, -tau_prime);
    p.add_psd(b.take());
  }
  // xi + min over the ball of h1 (Z + Gamma) h1^H >= a.
  {
    const std::optional<Var> s = slack_for(p, ch, 0);
    Block b(ch, 0);
    b.lift(z, 1.0).corner(xi, 1.0).corner(a, -1.0).slack(s);
    if (gamma) b.lift(*gamma, 1.0);
    p.add_psd(b.take());
  }
  // beta (xi + max over the ball of h1 Gamma h1^H) <= 1.
  if (gamma) {
    const std::optional<Var> s = slack_for(p, ch, 0);
    Block b(ch, 0);
    b.lift(*gamma, -1.0).corner(xi, -1.0).corner(1.0 / beta).slack(s);
    p.add_psd(b.take());
  } else {
    AffineHermitian f(1);
    f.add_constant(1.0 / beta).add_scaled(xi, -1.0);
    p.add_psd(std::move(f));
  }
  // At the optimum xi = 1 / (beta (1 + max h1 Qa h1^H)) >= xi_min. When the
  // QoMS target is infeasible only xi = 0 remains, and the solver settles on
  // this floor instead.
  const double outer = ch.channels[0].norm() + ch.radius(0);
  const double xi_min = 1.0 / (beta * (1.0 + outer * outer * cfg.power));
  {
    AffineHermitian floor(1);
    floor.add_scaled(xi, 1.0).add_constant(-1e-6 * xi_min);
    p.add_psd(std::move(floor));
  }
  AffineHermitian budget(1);
  budget.add_scaled(xi, cfg.power).add_trace(z, n, -1.0);
  if (gamma) budget.add_trace(*gamma, n, -1.0);
  if (phi) budget.add_trace(*phi, n, -1.0);
  p.add_psd(std::move(budget));
  AffineHermitian obj(1);
  obj.add_scaled(a, 1.0);
  p.maximize(obj);

  const sdp::Solution s = sdp::solve(p, solver);
  out.status = s.status;
  if (!s.optimal()) return out;
  out.xi = s.scalar(xi);
  if (out.xi < 1e-3 * xi_min) {
    out.status = sdp::Status::kInfeasible;
    return out;
  }
  out.a = s.objective;
  out.z = s.matrix(z);
  if (gamma) out.gamma = s.matrix(*gamma);
  if (phi) out.phi = s.matrix(*phi);
  out.triple.qc = unscaled(s, z, out.xi);
  if (gamma) out.triple.qa = unscaled(s, *gamma, out.xi);
  if (phi) out.triple.q0 = unscaled(s, *phi, out.xi);
  out.lambda_slacks.assign(k_count - 1, 0.0);
  out.mu_slacks.assign(k_count, 0.0);
  for (int k = 1; k < k_count; ++k) {
    if (lambda[k - 1]) out.lambda_slacks[k - 1] = std::max(0.0, s.scalar(*lambda[k - 1]));
  }
  for (int k = 0; k < k_count; ++k) {
    if (mu[k]) out.mu_slacks[k] = std::max(0.0, s.scalar(*mu[k]));
  }
  return out;
}

double lower_bound_call_bound(const SystemConfig& cfg) {
  return std::ceil((beta_max(cfg) - 1.0) / (std::exp2(cfg.search_epsilon) - 1.0) - 1e-12);
}

RatePoint lower_bound_srm(double tau_ms, const SystemConfig& cfg, const RobustSettings& rs,
                          const WorstCaseCapacity* cap) {
  cfg.validate();
  rs.validate();
  const SystemConfig c = with_eps(cfg, rs);
  const int n = cfg.channels.n_tx;
  RatePoint pt;
  pt.tau_ms = tau_ms;
  pt.tau_prime = std::exp2(tau_ms) - 1.0;
  pt.triple = CovarianceTriple::zero(n);
  pt.diagnostics.call_bound = lower_bound_call_bound(c) + 1.0;
  if (!(tau_ms >= 0.0)) throw ValidationError("tau_ms must be nonnegative");

  WorstCaseCapacity local;
  if (cap == nullptr) {
    local = wc_multicast_capacity(cfg, rs.solver);
    pt.diagnostics.solver_calls += local.solver_calls;
    cap = &local;
  }
  if (tau_ms > cap->tau_max * (1.0 + 1e-9) + 1e-12) {
    pt.status = PointStatus::kInfeasible;
    pt.message = "QoMS target infeasible";
    return pt;
  }
  if (cfg.power == 0.0 || tau_ms >= cap->tau_max * (1.0 - 1e-9)) {
    pt.triple.q0 = cap->q0;
    pt.status = PointStatus::kOptimal;
    pt.outer_arg = 1.0;
    fill_diagnostics(pt, cfg.channels);
    return pt;
  }

  const std::vector<double> grid = search::uniform_grid(1.0, beta_max(cfg), std::exp2(rs.eps) - 1.0);
  std::map<double, LowerBoundSolution> solved;
  auto eval = [&](int, double beta, const search::Hint&) {
    LowerBoundSolution s = lower_bound_inner(beta, pt.tau_prime, cfg, rs.artificial_noise, rs.solver);
    ++pt.diagnostics.solver_calls;
    if (s.status == sdp::Status::kInfeasible) return search::Evaluation::infeasible();
    if (!s.feasible()) return search::Evaluation::failed();
    const double a = s.a;
    solved.emplace(beta, std::move(s));
    return search::Evaluation::value(a);
  };
  const search::Result r = search::maximize(grid, eval, outer_search_options(c, rs.search_mode));
  if (!r.feasible) {
    const bool all_failed = r.failures == r.evaluations;
    pt.status = all_failed ? PointStatus::kFailed : PointStatus::kInfeasible;
    pt.message = all_failed ? "solver failure at every beta" : "QoMS target infeasible";
    return pt;
  }
  const LowerBoundSolution& best = solved.at(r.best_x);
  pt.triple = best.triple;
  pt.outer_arg = best.beta;
  pt.secrecy_rate = std::max(0.0, std::log2(best.a));
  pt.status = PointStatus::kOptimal;
  fill_diagnostics(pt, cfg.channels);
  return pt;
}

RegionResult lower_bound_region(const SystemConfig& cfg, const std::vector<double>& taus, const RobustSettings& rs) {
  cfg.validate();
  rs.validate();
  const WorstCaseCapacity cap = wc_multicast_capacity(cfg, rs.solver);
  return sweep("lower-bound", cap.tau_max, cap.solver_calls, taus, cfg.channels.n_tx,
               [&](double tau) { return lower_bound_srm(tau, cfg, rs, &cap); });
}

RegionResult lower_bound_region(const SystemConfig& cfg, const RobustSettings& rs) {
  cfg.validate();
  const WorstCaseCapacity cap = wc_multicast_capacity(cfg, rs.solver);
  if (cfg.power == 0.0) return lower_bound_region(cfg, std::vector<double>{0.0}, rs);
  return lower_bound_region(cfg, tau_grid(cap.tau_max, cfg.grid_points), rs);
}

RegionResult no_an_region(const SystemConfig& cfg, bool robust, const RobustSettings& rs) {
  if (robust) {
    RobustSettings r = rs;
    r.artificial_noise = false;
    return robust_region_sweep(cfg, r);
  }
  return region_sweep(with_eps(cfg, rs), perfect_options(rs, false));
}

RegionResult tdma_region(const SystemConfig& cfg, bool robust, const RobustSettings& rs) {
  cfg.validate();
  rs.validate();
  const int n = cfg.channels.n_tx;
  const SystemConfig c = with_eps(cfg, rs);
  RegionResult out;
  out.scheme = robust ? "tdma-robust" : "tdma";
  RatePoint corner;
  HermitianMatrix q0;
  if (robust) {
    const WorstCaseCapacity cap = wc_multicast_capacity(cfg, rs.solver);
    out.tau_max = cap.tau_max;
    q0 = cap.q0;
    out.total_solver_calls += cap.solver_calls;
    corner = robust_qoms_srm(0.0, cfg, rs, &cap);
  } else {
    const MulticastCapacity cap = multicast_capacity(cfg, rs.solver);
    out.tau_max = cap.tau_max;
    q0 = cap.q0;
    out.total_solver_calls += cap.solver_calls;
    corner = qoms_srm(0.0, c, perfect_options(rs, true), &cap);
  }
  out.total_solver_calls += corner.diagnostics.solver_calls;
  if (corner.status != PointStatus::kOptimal) {
    corner.message = "zero-QoMS corner: " + corner.message;
    out.points.push_back(std::move(corner));
    return out;
  }
  // Each service gets half of the time.
  const double r0 = 0.5 * out.tau_max;
  const double rc = 0.5 * corner.secrecy_rate;
  const std::vector<double> taus = cfg.power == 0.0 ? std::vector<double>{0.0} : tau_grid(r0, cfg.grid_points);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    RatePoint pt;
    pt.tau_ms = taus[i];
    pt.tau_prime = std::exp2(taus[i]) - 1.0;
    pt.multicast_rate_achieved = taus[i];
    pt.secrecy_rate = r0 > 0.0 ? rc * (1.0 - taus[i] / r0) : rc;
    if (i + 1 == taus.size() && taus.size() > 1) pt.secrecy_rate = 0.0;
    pt.outer_arg = r0 > 0.0 ? 1.0 - taus[i] / r0 : 1.0;  // time share of the confidential service
    pt.triple = i == 0 ? corner.triple : CovarianceTriple::zero(n);
    if (i + 1 == taus.size() && taus.size() > 1) pt.triple = {q0, HermitianMatrix::zero(n), HermitianMatrix::zero(n)};
    pt.status = PointStatus::kOptimal;
    out.points.push_back(std::move(pt));
  }
  out.points.front().diagnostics = corner.diagnostics;
  return out;
}

RegionResult nonrobust_eval(const SystemConfig& cfg, const SchemeOptions& opt) {
  cfg.validate();
  SystemConfig nominal = cfg;
  nominal.channels = cfg.channels.nominal();
  RegionResult out = region_sweep(nominal, opt);
  out.scheme = "nonrobust";
  for (RatePoint& pt : out.points) {
    if (pt.status != PointStatus::kOptimal) continue;
    const RateBreakdown wc = exact_worst_case(pt.triple, cfg.channels);
    pt.secrecy_rate = wc.secrecy_rate;
    pt.multicast_rate_achieved = wc.multicast_rate;
    pt.diagnostics.qoms_slack = wc.multicast_rate - pt.tau_ms;
  }
  return out;
}

double achievable_secrecy(const RegionResult& r, double tau) {
  double best = 0.0;
  for (const RatePoint& p : r.points) {
    if (p.status == PointStatus::kOptimal && p.multicast_rate_achieved >= tau - 1e-5) {
      best = std::max(best, p.secrecy_rate);
    }
  }
  return best;
}

}  // namespace secrate
