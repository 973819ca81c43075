#include "secrate/robust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "lmi_util.hpp"
#include "secrate/perfect_region.hpp"

namespace secrate {

namespace {

using sdp::AffineHermitian;
using sdp::Var;
using lmi::border;
using lmi::lifted;

constexpr double kInf = std::numeric_limits<double>::infinity();

bool exact(const ChannelSet& ch, int k) { return ch.radius(k) == 0.0; }

// Number of halvings that bring a bracket of width w down to tol.
int halvings(double w, double tol) { return w <= tol ? 0 : static_cast<int>(std::ceil(std::log2(w / tol) - 1e-12)); }

// Variables, T_k, S_k and (optionally) the power budget; the caller adds U
// and the objective.
struct LevelProblem {
  sdp::Problem p;
  RobustVariables v;
};

LevelProblem level_problem(double beta, double tau_prime, const SystemConfig& cfg, bool an, bool budget) {
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  const int k_count = ch.size();
  LevelProblem lp;
  sdp::Problem& p = lp.p;
  RobustVariables& v = lp.v;
  v.qc = p.add_hermitian_psd(n, "Qc");
  if (an) v.qa = p.add_hermitian_psd(n, "Qa");
  const bool multicast = tau_prime > 0.0;
  if (multicast) v.q0 = p.add_hermitian_psd(n, "Q0");
  v.t.resize(k_count - 1);
  v.delta.resize(k_count);
  for (int k = 1; k < k_count; ++k) {
    if (!exact(ch, k)) v.t[k - 1] = p.add_nonnegative("t");
  }
  for (int k = 0; multicast && k < k_count; ++k) {
    if (!exact(ch, k)) v.delta[k] = p.add_nonnegative("delta");
  }
  if (!exact(ch, 0)) v.rho = p.add_nonnegative("rho");

  RobustLmis l = build_lmis(beta, 1.0 / beta, tau_prime, ch, v, true);
  for (auto& t : l.t) p.add_psd(std::move(t));
  for (int k = 0; multicast && k < k_count; ++k) p.add_psd(std::move(l.s[k]));
  if (budget) {
    AffineHermitian b(1);
    b.add_constant(cfg.power).add_trace(v.qc, n, -1.0);
    if (v.qa) b.add_trace(*v.qa, n, -1.0);
    if (v.q0) b.add_trace(*v.q0, n, -1.0);
    p.add_psd(std::move(b));
  }
  return lp;
}

AffineHermitian u_block(double beta, double level, double tau_prime, const ChannelSet& ch, const RobustVariables& v) {
  return build_lmis(beta, level, tau_prime, ch, v, true).u;
}

void read_solution(const sdp::Solution& s, const RobustVariables& v, const ChannelSet& ch, RobustInnerSolution& out) {
  const int n = ch.n_tx;
  out.qc = s.matrix(v.qc).clipped();
  out.qa = v.qa ? s.matrix(*v.qa).clipped() : HermitianMatrix::zero(n);
  out.q0 = v.q0 ? s.matrix(*v.q0).clipped() : HermitianMatrix::zero(n);
  out.t_slacks.assign(ch.size() - 1, 0.0);
  out.delta_slacks.assign(ch.size(), 0.0);
  for (std::size_t k = 0; k < v.t.size(); ++k) {
    if (v.t[k].block >= 0) out.t_slacks[k] = std::max(0.0, s.scalar(v.t[k]));
  }
  for (std::size_t k = 0; k < v.delta.size(); ++k) {
    if (v.delta[k].block >= 0) out.delta_slacks[k] = std::max(0.0, s.scalar(v.delta[k]));
  }
  out.rho = v.rho.block >= 0 ? std::max(0.0, s.scalar(v.rho)) : 0.0;
}

struct Bracket {
  double floor = 0.0;  // certified by another solution; 0 if unknown
  double ceiling = kInf;
  double prune_target = 0.0;  // stop once eta <= prune_target is shown
  int extra_tests = 0;  // allowance beyond the bisection bound
};

enum class LevelOutcome { kFeasible, kLevelInfeasible, kProblemInfeasible, kFailed };

// Bisection on the level without the final covariance recovery. The
// returned covariances (if any) certify `eta`.
class Bisection {
 public:
  Bisection(double beta, double tau_prime, const SystemConfig& cfg, const RobustSettings& rs)
      : beta_(beta), tau_prime_(tau_prime), cfg_(cfg), rs_(rs), tol_(rs.bisection_tol()) {}

  RobustInnerSolution run(const Bracket& br) {
    const double beta_max = robust_beta_max(cfg_);
    out_.beta = beta_;
    out_.status = sdp::Status::kOptimal;
    const int n = cfg_.channels.n_tx;
    out_.q0 = out_.qc = out_.qa = HermitianMatrix::zero(n);
    double lo = 1.0 / beta_;
    double hi = std::min(beta_max / beta_, br.ceiling);
    const int budget = static_cast<int>(std::floor(std::log2((beta_max - 1.0) / beta_ / tol_) + 1.0)) +
                       br.extra_tests;
    bool known_feasible = false;
    if (br.floor > 0.0) {
      lo = std::max(lo, br.floor);
      known_feasible = true;
    }
    hi = std::max(hi, lo);
    bool probe_next = false;
    auto allowed = [&](double x) {
      return out_.iterations + 1 + halvings(std::max(x - lo, hi - x), tol_) <= budget;
    };
    auto test = [&](double x) {
      const LevelOutcome o = level_test(x);
      ++out_.iterations;
      if (o == LevelOutcome::kFeasible) {
        lo = std::max(x, lo);
        known_feasible = true;
      } else if (o == LevelOutcome::kLevelInfeasible) {
        hi = x;
        known_feasible = true;
      }
      if (jump_ > lo) {
        probe_next = jump_ > x && jump_ < hi;
        lo = std::min(jump_, hi);
      }
      return o;
    };

    const double target = br.prune_target * (1.0 - 1e-12);
    if (target > lo && target < hi && allowed(target)) {
      const LevelOutcome o = test(target);
      if (o == LevelOutcome::kProblemInfeasible) return infeasible();
      if (o == LevelOutcome::kFailed) return failed(known_feasible, lo, hi);
      if (o == LevelOutcome::kLevelInfeasible) return finish(lo, hi);
    }
    while (hi - lo > tol_) {
      double x = 0.5 * (lo + hi);
      if (probe_next && known_feasible && allowed(lo + tol_)) x = lo + tol_;
      probe_next = false;
      const LevelOutcome o = test(x);
      if (o == LevelOutcome::kProblemInfeasible) {
        if (known_feasible) return failed(true, lo, hi);
        return infeasible();
      }
      if (o == LevelOutcome::kFailed) return failed(known_feasible, lo, hi);
    }
    if (!known_feasible) {
      // The interval was already narrow; one test settles feasibility.
      const LevelOutcome o = test(lo);
      if (o == LevelOutcome::kProblemInfeasible) return infeasible();
      if (o == LevelOutcome::kFailed) return failed(false, lo, hi);
    }
    return finish(lo, hi);
  }

  /// True when the returned covariances come from this bisection rather
  /// than from the floor passed in.
  bool certified() const { return certified(out_.level); }

 private:
  bool certified(double lo) const { return have_solution_ && best_ >= lo; }

  // Maximizes the margin nu with U - nu e e^T >= 0 at the level. The
  // solution also certifies the exact worst-case level of its covariances,
  // recorded in jump_.
  LevelOutcome level_test(double level) {
    const ChannelSet& ch = cfg_.channels;
    LevelProblem lp = level_problem(beta_, tau_prime_, cfg_, true, true);
    const Var nu = lp.p.add_free("nu");
    AffineHermitian u = u_block(beta_, level, tau_prime_, ch, lp.v);
    u.add_scaled(nu, lmi::corner(u.dim(), -1.0));
    lp.p.add_psd(std::move(u));
    AffineHermitian obj(1);
    obj.add_scaled(nu, 1.0);
    lp.p.maximize(obj);
    const sdp::Solution s = sdp::solve(lp.p, rs_.solver);
    ++out_.solver_calls;
    if (s.status == sdp::Status::kInfeasible) return LevelOutcome::kProblemInfeasible;
    if (!s.optimal()) return LevelOutcome::kFailed;

    RobustInnerSolution cand;
    read_solution(s, lp.v, ch, cand);
    const RatioExtreme r = min_ratio_over_ball(ch.channels[0], ch.radius(0), cand.qc, cand.qa);
    const double certified = (1.0 + r.value) / beta_ * (1.0 - 1e-9);
    const bool feasible = s.objective >= -1e-9 * (1.0 + level * beta_);
    const double reached = std::max(feasible ? level : 0.0, certified);
    if (reached > best_) {
      best_ = reached;
      cand.beta = beta_;
      best_solution_ = std::move(cand);
      have_solution_ = true;
    }
    jump_ = certified;
    return feasible ? LevelOutcome::kFeasible : LevelOutcome::kLevelInfeasible;
  }

  RobustInnerSolution finish(double lo, double hi) {
    if (certified(lo)) {
      const int iterations = out_.iterations;
      const long calls = out_.solver_calls;
      out_ = best_solution_;
      out_.iterations = iterations;
      out_.solver_calls = calls;
      out_.status = sdp::Status::kOptimal;
    }
    out_.eta = out_.level = lo;
    out_.upper = hi;
    return out_;
  }
  RobustInnerSolution infeasible() {
    out_.status = sdp::Status::kInfeasible;
    return out_;
  }
  // A failed test ends the bisection; what was certified so far stands.
  RobustInnerSolution failed(bool known_feasible, double lo, double hi) {
    if (!known_feasible) {
      out_.status = sdp::Status::kNumericalFailure;
      return out_;
    }
    return finish(lo, hi);
  }

  double beta_, tau_prime_;
  const SystemConfig& cfg_;
  const RobustSettings& rs_;
  double tol_;
  RobustInnerSolution out_;
  RobustInnerSolution best_solution_;
  bool have_solution_ = false;
  double best_ = 0.0;
  double jump_ = 0.0;
};

// Minimum total power at a certified level. Every optimal confidential
// covariance of this problem has rank one, unlike the interior-point output
// of the margin problem.
// The level is backed off slightly so the returned blocks keep a margin.
bool recover(double tau_prime, const SystemConfig& cfg, const RobustSettings& rs, RobustInnerSolution& s) {
  const double level = s.level * (1.0 - 1e-8);
  LevelProblem lp = level_problem(s.beta, tau_prime, cfg, rs.artificial_noise, false);
  lp.p.add_psd(u_block(s.beta, level, tau_prime, cfg.channels, lp.v));
  const int n = cfg.channels.n_tx;
  AffineHermitian obj(1);
  obj.add_trace(lp.v.qc, n);
  if (lp.v.qa) obj.add_trace(*lp.v.qa, n);
  if (lp.v.q0) obj.add_trace(*lp.v.q0, n);
  lp.p.minimize(obj);
  const sdp::Solution sol = sdp::solve(lp.p, rs.solver);
  ++s.solver_calls;
  if (!sol.optimal() || sol.objective > cfg.power * (1.0 + 1e-7)) return false;
  read_solution(sol, lp.v, cfg.channels, s);
  s.level = s.eta = level;
  return true;
}

// Without AN, U is affine in (Qc, level): one SDP maximizes the level.
RobustInnerSolution direct_level(double beta, double tau_prime, const SystemConfig& cfg, const RobustSettings& rs) {
  const ChannelSet& ch = cfg.channels;
  LevelProblem lp = level_problem(beta, tau_prime, cfg, false, true);
  const Var a = lp.p.add_free("a");
  AffineHermitian u = u_block(beta, 0.0, tau_prime, ch, lp.v);
  u.add_scaled(a, lmi::corner(u.dim(), -beta));
  lp.p.add_psd(std::move(u));
  AffineHermitian obj(1);
  obj.add_scaled(a, 1.0);
  lp.p.maximize(obj);
  const sdp::Solution s = sdp::solve(lp.p, rs.solver);
  RobustInnerSolution out;
  out.beta = beta;
  out.status = s.status;
  out.solver_calls = 1;
  out.iterations = 1;
  const int n = ch.n_tx;
  out.q0 = out.qc = out.qa = HermitianMatrix::zero(n);
  if (!s.optimal()) return out;
  read_solution(s, lp.v, ch, out);
  // The exact worst case of the iterate, which the optimum attains.
  const RatioExtreme r = min_ratio_over_ball(ch.channels[0], ch.radius(0), out.qc, out.qa);
  out.eta = out.level = std::max(1.0 / beta, (1.0 + r.value) / beta * (1.0 - 1e-9));
  out.upper = std::max(out.eta, s.objective);
  return out;
}

RobustInnerSolution checked_inner(double beta, double tau_prime, const SystemConfig& cfg, const RobustSettings& rs) {
  const double beta_max = robust_beta_max(cfg);
  if (!(beta >= 1.0) || beta > beta_max * (1.0 + 1e-12)) throw ValidationError("beta outside [1, beta_max]");
  if (!(tau_prime >= 0.0)) throw ValidationError("tau' must be nonnegative");
  if (!rs.artificial_noise) return direct_level(beta, tau_prime, cfg, rs);
  return Bisection(beta, tau_prime, cfg, rs).run({});
}

void fill_diagnostics(RatePoint& pt, const ChannelSet& ch) {
  const RankDiagnostics rd = rank_diagnostics(pt.triple);
  pt.diagnostics.rank_ratio_qc = rd.qc;
  pt.diagnostics.rank_ratio_q0 = rd.q0;
  pt.diagnostics.rank_ratio_qa = rd.qa;
  pt.multicast_rate_achieved = exact_worst_case(pt.triple, ch).multicast_rate;
  pt.diagnostics.qoms_slack = pt.multicast_rate_achieved - pt.tau_ms;
}

}  // namespace

RobustSettings RobustSettings::from_config(const SystemConfig& cfg) {
  RobustSettings rs;
  rs.eps = cfg.search_epsilon;
  rs.eps_b = cfg.eps_b();
  return rs;
}

double RobustSettings::bisection_tol() const { return eps_b > 0.0 ? eps_b : default_bisection_tol(eps); }

void RobustSettings::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("eps must be positive");
  const double tol = bisection_tol();
  if (!(tol > 0.0) || !(tol < 1.0 - std::exp2(-eps))) throw ValidationError("eps_b must lie in (0, 1 - 2^-eps)");
}

RobustLmis build_lmis(double beta, double level, double tau_prime, const ChannelSet& ch, const RobustVariables& v,
                      bool scalar_when_exact) {
  const int n = ch.n_tx;
  RobustLmis out;
  auto block = [&](int k) {
    const bool scalar = scalar_when_exact && exact(ch, k);
    return AffineHermitian(scalar ? 1 : n + 1);
  };
  // coeff * hh X hh^H, or coeff * h X h^H in scalar form.
  auto lift = [&](AffineHermitian& f, Var x, int k, double coeff) {
    const CRowVector& h = ch.channels[k];
    if (f.dim() == 1) {
      f.add_quad(x, h, coeff);
    } else {
      f.add_congruence(x, lifted(h), coeff);
    }
  };
  // slack * diag(I, -eps^2) plus c on the last diagonal entry.
  auto finish = [&](AffineHermitian& f, Var slack, int k, double c) {
    if (f.dim() == 1) {
      f.add_constant(c);
      return;
    }
    const double eps = ch.radius(k);
    f.add_scaled(slack, border(n, 1.0, -eps * eps));
    f.add_constant(border(n, 0.0, c));
  };

  for (int k = 1; k < ch.size(); ++k) {
    AffineHermitian f = block(k);
    if (v.qa) lift(f, *v.qa, k, beta - 1.0);
    lift(f, v.qc, k, -1.0);
    finish(f, v.t[k - 1], k, beta - 1.0);
    out.t.push_back(std::move(f));
  }
  for (int k = 0; k < ch.size(); ++k) {
    AffineHermitian f = block(k);
    if (v.q0) lift(f, *v.q0, k, 1.0);
    if (v.qa) lift(f, *v.qa, k, -tau_prime);
    lift(f, v.qc, k, -tau_prime);
    finish(f, v.delta[k], k, -tau_prime);
    out.s.push_back(std::move(f));
  }
  const double lb = level * beta;
  out.u = block(0);
  lift(out.u, v.qc, 0, 1.0);
  if (v.qa) lift(out.u, *v.qa, 0, 1.0 - lb);
  finish(out.u, v.rho, 0, 1.0 - lb);
  return out;
}

WorstCaseCapacity wc_multicast_capacity(const SystemConfig& cfg, const sdp::Settings& solver) {
  cfg.validate(1);
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  WorstCaseCapacity out;
  out.q0 = HermitianMatrix::zero(n);
  if (cfg.power == 0.0) return out;

  sdp::Problem p;
  RobustVariables v;
  v.q0 = p.add_hermitian_psd(n, "Q0");
  const Var t = p.add_free("t");
  v.delta.resize(ch.size());
  for (int k = 0; k < ch.size(); ++k) {
    if (!exact(ch, k)) v.delta[k] = p.add_nonnegative("delta");
  }
  // S_k with Qc = Qa = 0 and t in place of tau' on the border entry.
  for (int k = 0; k < ch.size(); ++k) {
    AffineHermitian f(exact(ch, k) ? 1 : n + 1);
    const CRowVector& h = ch.channels[k];
    if (f.dim() == 1) {
      f.add_quad(*v.q0, h);
    } else {
      const double eps = ch.radius(k);
      f.add_congruence(*v.q0, lifted(h)).add_scaled(v.delta[k], border(n, 1.0, -eps * eps));
    }
    f.add_scaled(t, lmi::corner(f.dim(), -1.0));
    p.add_psd(std::move(f));
  }
  AffineHermitian budget(1);
  budget.add_constant(cfg.power).add_trace(*v.q0, n, -1.0);
  p.add_psd(std::move(budget));
  AffineHermitian obj(1);
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  const sdp::Solution s = sdp::solve(p, solver);
  out.solver_calls = 1;
  if (!s.optimal()) {
    throw std::runtime_error(std::string("worst-case multicast capacity: solver returned ") +
                             sdp::to_string(s.status));
  }
  out.q0 = s.matrix(*v.q0).clipped();
  out.tau_max = std::log2(1.0 + std::max(0.0, s.objective));
  return out;
}

double robust_beta_max(const SystemConfig& cfg) {
  const ChannelSet& ch = cfg.channels;
  const double m = ch.channels.at(0).norm() - ch.radius(0);
  return 1.0 + cfg.power * m * m;
}

double robust_beta_step(const RobustSettings& rs) {
  const double e = std::exp2(rs.eps);
  const double tol = rs.bisection_tol();
  return (e * (1.0 - tol) - 1.0) / (1.0 + e * tol);
}

RobustInnerSolution robust_inner(double beta, double tau_prime, const SystemConfig& cfg, const RobustSettings& rs) {
  cfg.validate();
  rs.validate();
  RobustInnerSolution s = checked_inner(beta, tau_prime, cfg, rs);
  if (s.feasible() && s.level > 0.0) {
    RobustInnerSolution r = s;
    if (recover(tau_prime, cfg, rs, r)) {
      s = r;
    } else {
      s.solver_calls = r.solver_calls;
    }
  }
  return s;
}

std::vector<double> robust_lmi_min_eigenvalues(const RobustInnerSolution& s, double tau_prime,
                                               const ChannelSet& ch) {
  const int n = ch.n_tx;
  sdp::Problem p;
  RobustVariables v;
  sdp::Assignment values;
  auto matrix = [&](const HermitianMatrix& m) {
    values.push_back(m.matrix());
    return p.add_hermitian_psd(n);
  };
  auto scalar = [&](double x) {
    values.push_back(CMatrix::Constant(1, 1, Complex(x, 0.0)));
    return p.add_free();
  };
  v.q0 = matrix(s.q0);
  v.qc = matrix(s.qc);
  v.qa = matrix(s.qa);
  for (int k = 1; k < ch.size(); ++k) v.t.push_back(scalar(k - 1 < static_cast<int>(s.t_slacks.size()) ? s.t_slacks[k - 1] : 0.0));
  for (int k = 0; k < ch.size(); ++k) v.delta.push_back(scalar(k < static_cast<int>(s.delta_slacks.size()) ? s.delta_slacks[k] : 0.0));
  v.rho = scalar(s.rho);
  const RobustLmis l = build_lmis(s.beta, s.level, tau_prime, ch, v, true);
  std::vector<double> out;
  auto eig = [&](const AffineHermitian& f) {
    out.push_back(HermitianMatrix::symmetrized(f.evaluate(values)).min_eigenvalue());
  };
  for (const auto& f : l.t) eig(f);
  for (const auto& f : l.s) eig(f);
  eig(l.u);
  return out;
}

double robust_call_bound(const SystemConfig& cfg, const RobustSettings& rs) {
  const double gain = robust_beta_max(cfg) - 1.0;
  const double step = robust_beta_step(rs);
  const double tol = rs.bisection_tol();
  const auto m = static_cast<long>(std::ceil(gain / step - 1e-12));
  double total = 0.0;
  for (long i = 1; i <= m; ++i) total += std::log2(gain / ((1.0 + step * static_cast<double>(i)) * tol));
  return total;
}

RatePoint robust_qoms_srm(double tau_ms, const SystemConfig& cfg, const RobustSettings& rs,
                          const WorstCaseCapacity* cap) {
  cfg.validate();
  rs.validate();
  const int n = cfg.channels.n_tx;
  RatePoint pt;
  pt.tau_ms = tau_ms;
  pt.tau_prime = std::exp2(tau_ms) - 1.0;
  pt.triple = CovarianceTriple::zero(n);
  // Level tests plus the capacity solve and the final recovery. Without AN
  // each beta costs a single solve.
  const double beta_max = robust_beta_max(cfg);
  std::vector<double> grid{1.0};
  const std::vector<double> rest = search::uniform_grid(1.0, beta_max, robust_beta_step(rs));
  grid.insert(grid.end(), rest.begin(), rest.end());
  pt.diagnostics.call_bound =
      (rs.artificial_noise ? robust_call_bound(cfg, rs) : static_cast<double>(grid.size())) + 2.0;
  if (!(tau_ms >= 0.0)) throw ValidationError("tau_ms must be nonnegative");

  WorstCaseCapacity local;
  if (cap == nullptr) {
    local = wc_multicast_capacity(cfg, rs.solver);
    pt.diagnostics.solver_calls += local.solver_calls;
    cap = &local;
  }
  const double tau_max = cap->tau_max;
  if (tau_ms > tau_max * (1.0 + 1e-9) + 1e-12) {
    pt.status = PointStatus::kInfeasible;
    pt.message = "QoMS target infeasible";
    return pt;
  }
  if (cfg.power == 0.0 || tau_ms >= tau_max * (1.0 - 1e-9)) {
    pt.triple.q0 = cap->q0;
    pt.status = PointStatus::kOptimal;
    pt.outer_arg = 1.0;
    fill_diagnostics(pt, cfg.channels);
    return pt;
  }

  SystemConfig outer = cfg;
  outer.search_epsilon = rs.eps;
  search::Options so = outer_search_options(outer, rs.search_mode);
  // Each polish point costs a full bisection; the grid guarantee suffices.
  so.polish_tol = 0.0;
  std::map<double, RobustInnerSolution> solved;
  auto eval = [&](int, double beta, const search::Hint& h) {
    if (!rs.artificial_noise) {
      RobustInnerSolution s = direct_level(beta, pt.tau_prime, cfg, rs);
      pt.diagnostics.solver_calls += s.solver_calls;
      if (s.status == sdp::Status::kInfeasible) return search::Evaluation::infeasible();
      if (!s.feasible()) return search::Evaluation::failed();
      const search::Evaluation e = search::Evaluation::bracket(s.eta, s.upper);
      solved.emplace(beta, std::move(s));
      return e;
    }
    Bracket br;
    br.floor = h.floor;
    br.ceiling = h.ceiling;
    br.prune_target = h.prune_target;
    br.extra_tests = 1;
    Bisection bis(beta, pt.tau_prime, cfg, rs);
    RobustInnerSolution s = bis.run(br);
    pt.diagnostics.solver_calls += s.solver_calls;
    if (s.status == sdp::Status::kInfeasible) return search::Evaluation::infeasible();
    if (!s.feasible()) return search::Evaluation::failed();
    const search::Evaluation e = search::Evaluation::bracket(s.eta, s.upper);
    if (bis.certified()) solved.emplace(beta, std::move(s));
    return e;
  };
  const search::Result r = search::maximize(grid, eval, so);
  if (!r.feasible) {
    const bool all_failed = r.failures == r.evaluations;
    pt.status = all_failed ? PointStatus::kFailed : PointStatus::kInfeasible;
    pt.message = all_failed ? "solver failure at every beta" : "QoMS target infeasible";
    return pt;
  }
  // The winning value was certified by some solve; take the best solve.
  const RobustInnerSolution* best = nullptr;
  for (const auto& [beta, s] : solved) {
    if ((best == nullptr || s.eta > best->eta * (1.0 + 1e-12))) best = &s;
  }
  if (best == nullptr) {
    pt.status = PointStatus::kFailed;
    pt.message = "no certified solution";
    return pt;
  }
  RobustInnerSolution sol = *best;
  sol.solver_calls = 0;
  if (!recover(pt.tau_prime, cfg, rs, sol)) pt.message = "covariance recovery failed; margin solution kept";
  pt.diagnostics.solver_calls += sol.solver_calls;
  pt.triple = sol.triple();
  pt.outer_arg = sol.beta;
  pt.secrecy_rate = std::max(0.0, std::log2(sol.eta));
  pt.status = PointStatus::kOptimal;
  fill_diagnostics(pt, cfg.channels);
  return pt;
}

RegionResult robust_region_sweep(const SystemConfig& cfg, const std::vector<double>& taus, const RobustSettings& rs) {
  cfg.validate();
  rs.validate();
  RegionResult out;
  out.scheme = rs.artificial_noise ? "robust" : "robust-no-an";
  const WorstCaseCapacity cap = wc_multicast_capacity(cfg, rs.solver);
  out.tau_max = cap.tau_max;
  out.total_solver_calls = cap.solver_calls;
  for (double tau : taus) {
    RatePoint pt;
    try {
      pt = robust_qoms_srm(tau, cfg, rs, &cap);
    } catch (const std::runtime_error& e) {
      pt.tau_ms = tau;
      pt.tau_prime = std::exp2(tau) - 1.0;
      pt.triple = CovarianceTriple::zero(cfg.channels.n_tx);
      pt.status = PointStatus::kFailed;
      pt.message = e.what();
    }
    out.total_solver_calls += pt.diagnostics.solver_calls;
    out.points.push_back(std::move(pt));
  }
  return out;
}

RegionResult robust_region_sweep(const SystemConfig& cfg, const RobustSettings& rs) {
  cfg.validate();
  const WorstCaseCapacity cap = wc_multicast_capacity(cfg, rs.solver);
  if (cfg.power == 0.0) return robust_region_sweep(cfg, std::vector<double>{0.0}, rs);
  return robust_region_sweep(cfg, tau_grid(cap.tau_max, cfg.grid_points), rs);
}

}  // namespace secrate
