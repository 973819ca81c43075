#include "secrate/perfect_region.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace secrate {

namespace {

using sdp::AffineHermitian;
using sdp::Var;

constexpr double kPolishTolerance = 1e-6;

AffineHermitian scalar() { return AffineHermitian(1); }

// Adds Tr(sum of blocks) <= budget (budget given as an expression).
void add_power(sdp::Problem& p, const std::vector<Var>& blocks, int n, AffineHermitian budget) {
  for (const Var& v : blocks) budget.add_trace(v, n, -1.0);
  p.add_psd(std::move(budget));
}

void fill_diagnostics(RatePoint& pt, const ChannelSet& ch) {
  const RankDiagnostics rd = rank_diagnostics(pt.triple);
  pt.diagnostics.rank_ratio_qc = rd.qc;
  pt.diagnostics.rank_ratio_q0 = rd.q0;
  pt.diagnostics.rank_ratio_qa = rd.qa;
  pt.multicast_rate_achieved = rates(pt.triple, ch).multicast_rate;
  pt.diagnostics.qoms_slack = pt.multicast_rate_achieved - pt.tau_ms;
}

// Orthonormal basis (columns) of the vectors orthogonal to every
// eavesdropper channel; may have zero columns.
CMatrix eavesdropper_null_space(const ChannelSet& ch) {
  const int n = ch.n_tx;
  CMatrix he(ch.size() - 1, n);
  for (int k = 1; k < ch.size(); ++k) he.row(k - 1) = ch.channels[k];
  Eigen::JacobiSVD<CMatrix> svd(he, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
  return svd.matrixV().rightCols(n - rank);
}

}  // namespace

search::Options outer_search_options(const SystemConfig& cfg, search::Mode mode) {
  search::Options so;
  so.mode = mode;
  // A quarter of the budget goes to pruning; the grid itself already costs
  // up to eps against the continuous optimum.
  so.prune_slack = std::exp2(0.25 * cfg.search_epsilon);
  so.left_edge = 1.0;
  so.polish_tol = kPolishTolerance;
  return so;
}

MulticastCapacity multicast_capacity(const SystemConfig& cfg, const sdp::Settings& solver) {
  cfg.validate(1);
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  MulticastCapacity out;
  out.q0 = HermitianMatrix::zero(n);
  if (cfg.power == 0.0) return out;

  sdp::Problem p;
  const Var q0 = p.add_hermitian_psd(n, "Q0");
  const Var t = p.add_free("t");
  for (const auto& h : ch.channels) {
    AffineHermitian c = scalar();
    c.add_quad(q0, h).add_scaled(t, -1.0);
    p.add_psd(c);
  }
  AffineHermitian budget = scalar();
  budget.add_constant(cfg.power);
  add_power(p, {q0}, n, budget);
  AffineHermitian obj = scalar();
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  const sdp::Solution s = sdp::solve(p, solver);
  out.solver_calls = 1;
  if (!s.optimal()) {
    throw std::runtime_error(std::string("multicast capacity: solver returned ") + sdp::to_string(s.status));
  }
  out.q0 = reduce_rank(s.matrix(q0).clipped(), ch.channels);
  out.tau_max = std::log2(1.0 + std::max(0.0, s.objective));
  return out;
}

InnerSolution inner_sdp(double alpha, double tau_prime, const SystemConfig& cfg, const SchemeOptions& opt) {
  cfg.validate();
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  const CRowVector& h1 = ch.channels[0];
  if (!(alpha >= 1.0) || alpha > 1.0 + cfg.power * h1.squaredNorm() * (1.0 + 1e-12)) {
    throw ValidationError("alpha outside [1, 1 + P |h1|^2]");
  }
  if (!(tau_prime >= 0.0)) throw ValidationError("tau' must be nonnegative");

  // At alpha = 1 the eavesdropper rows force Z h_k^H = 0, which leaves the
  // SDP without an interior point. Restricting Z to the common null space
  // of the eavesdropper channels removes those rows.
  CMatrix zb = CMatrix::Identity(n, n);
  const bool nulling = alpha == 1.0;
  if (nulling) zb = eavesdropper_null_space(ch);
  const int zdim = static_cast<int>(zb.cols());

  sdp::Problem p;
  const std::optional<Var> z = zdim > 0 ? std::optional<Var>(p.add_hermitian_psd(zdim, "Z")) : std::nullopt;
  // With tau' = 0 the multicast rows are vacuous and Phi = 0 is optimal;
  // keeping them only makes the problem degenerate.
  const bool multicast = tau_prime > 0.0;
  const std::optional<Var> phi = multicast ? std::optional<Var>(p.add_hermitian_psd(n, "Phi")) : std::nullopt;
  const std::optional<Var> gamma =
      opt.artificial_noise ? std::optional<Var>(p.add_hermitian_psd(n, "Gamma")) : std::nullopt;
  const Var xi = p.add_free("xi");
  auto add_z = [&](AffineHermitian& f, const CRowVector& h, double c) {
    if (z) f.add_quad(*z, h * zb, c);
  };

  // alpha xi + alpha h1 Gamma h1^H = 1
  AffineHermitian norm = scalar();
  norm.add_scaled(xi, alpha).add_constant(-1.0);
  if (gamma) norm.add_quad(*gamma, h1, alpha);
  p.add_equality(norm);

  AffineHermitian xi_floor = scalar();
  xi_floor.add_scaled(xi, 1.0).add_constant(-1e-9);
  p.add_psd(xi_floor);

  for (int k = 1; k < ch.size() && !nulling; ++k) {
    const CRowVector& h = ch.channels[k];
    AffineHermitian c = scalar();
    c.add_scaled(xi, alpha - 1.0);
    add_z(c, h, -1.0);
    if (gamma) c.add_quad(*gamma, h, alpha - 1.0);
    p.add_psd(c);
  }
  for (std::size_t k = 0; multicast && k < ch.channels.size(); ++k) {
    const CRowVector& h = ch.channels[k];
    AffineHermitian c = scalar();
    c.add_quad(*phi, h).add_scaled(xi, -tau_prime);
    add_z(c, h, -tau_prime);
    if (gamma) c.add_quad(*gamma, h, -tau_prime);
    p.add_psd(c);
  }
  AffineHermitian budget = scalar();
  budget.add_scaled(xi, cfg.power);
  if (z) budget.add_trace(*z, zdim, -1.0);
  if (phi) budget.add_trace(*phi, n, -1.0);
  if (gamma) budget.add_trace(*gamma, n, -1.0);
  p.add_psd(budget);

  AffineHermitian obj = scalar();
  obj.add_scaled(xi, 1.0);
  add_z(obj, h1, 1.0);
  if (gamma) obj.add_quad(*gamma, h1);
  p.maximize(obj);

  const sdp::Solution s = sdp::solve(p, opt.solver);
  InnerSolution out;
  out.status = s.status;
  out.alpha = alpha;
  out.z = HermitianMatrix::zero(n);
  out.gamma = HermitianMatrix::zero(n);
  out.phi = HermitianMatrix::zero(n);
  out.triple = CovarianceTriple::zero(n);
  if (!s.optimal()) return out;
  if (z) out.z = HermitianMatrix::symmetrized(zb * s.matrix(*z).matrix() * zb.adjoint());
  if (phi) out.phi = s.matrix(*phi);
  if (gamma) out.gamma = s.matrix(*gamma);
  out.xi = s.scalar(xi);
  out.eta = s.objective;
  const double inv = 1.0 / out.xi;
  // Interior-point solutions sit in the relative interior of the optimal
  // face, so lower-rank optimal covariances are recovered explicitly.
  const CovarianceTriple raw = CovarianceTriple{out.phi * inv, out.z * inv, out.gamma * inv}.clipped();
  out.triple = {reduce_rank(raw.q0, ch.channels), reduce_rank(raw.qc, ch.channels), reduce_rank(raw.qa, ch.channels)};
  return out;
}

std::optional<OracleResult> quasiconvex_oracle(double alpha, double tau_prime, const SystemConfig& cfg,
                                               const SchemeOptions& opt, double rel_tol) {
  cfg.validate();
  const ChannelSet& ch = cfg.channels;
  const int n = ch.n_tx;
  const CRowVector& h1 = ch.channels[0];

  // Largest margin s with  h1 (Qc + (1 - t alpha) Qa) h1^H + 1 - t alpha >= s.
  auto margin = [&](double level) -> std::optional<double> {
    sdp::Problem p;
    const Var qc = p.add_hermitian_psd(n, "Qc");
    const bool multicast = tau_prime > 0.0;
    const std::optional<Var> q0 = multicast ? std::optional<Var>(p.add_hermitian_psd(n, "Q0")) : std::nullopt;
    const std::optional<Var> qa =
        opt.artificial_noise ? std::optional<Var>(p.add_hermitian_psd(n, "Qa")) : std::nullopt;
    const Var s = p.add_free("s");
    for (int k = 1; k < ch.size(); ++k) {
      const CRowVector& h = ch.channels[k];
      AffineHermitian c = scalar();
      c.add_constant(alpha - 1.0).add_quad(qc, h, -1.0);
      if (qa) c.add_quad(*qa, h, alpha - 1.0);
      p.add_psd(c);
    }
    for (std::size_t k = 0; multicast && k < ch.channels.size(); ++k) {
      const CRowVector& h = ch.channels[k];
      AffineHermitian c = scalar();
      c.add_quad(*q0, h).add_quad(qc, h, -tau_prime).add_constant(-tau_prime);
      if (qa) c.add_quad(*qa, h, -tau_prime);
      p.add_psd(c);
    }
    AffineHermitian budget = scalar();
    budget.add_constant(cfg.power);
    std::vector<Var> blocks{qc};
    if (q0) blocks.push_back(*q0);
    if (qa) blocks.push_back(*qa);
    add_power(p, blocks, n, budget);
    const double ta = level * alpha;
    AffineHermitian lvl = scalar();
    lvl.add_quad(qc, h1).add_constant(1.0 - ta).add_scaled(s, -1.0);
    if (qa) lvl.add_quad(*qa, h1, 1.0 - ta);
    p.add_psd(lvl);
    AffineHermitian obj = scalar();
    obj.add_scaled(s, 1.0);
    p.maximize(obj);
    const sdp::Solution sol = sdp::solve(p, opt.solver);
    if (sol.status == sdp::Status::kInfeasible) return std::nullopt;
    if (!sol.optimal()) throw std::runtime_error("quasiconvex oracle: solver failure");
    return sol.objective;
  };

  OracleResult out;
  double lo = 1.0 / alpha;
  double hi = (1.0 + cfg.power * h1.squaredNorm()) / alpha;
  const auto first = margin(lo);
  ++out.solves;
  if (!first) return std::nullopt;
  while (hi - lo > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    const auto m = margin(mid);
    ++out.solves;
    if (m && *m >= -1e-9 * (1.0 + mid * alpha)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.eta = 0.5 * (lo + hi);
  return out;
}

double perfect_call_bound(const SystemConfig& cfg) {
  return cfg.power * cfg.channels.channels.at(0).squaredNorm() / (std::exp2(cfg.search_epsilon) - 1.0);
}

RatePoint qoms_srm(double tau_ms, const SystemConfig& cfg, const SchemeOptions& opt, const MulticastCapacity* cap) {
  cfg.validate();
  const int n = cfg.channels.n_tx;
  RatePoint pt;
  pt.tau_ms = tau_ms;
  pt.tau_prime = std::exp2(tau_ms) - 1.0;
  pt.triple = CovarianceTriple::zero(n);
  pt.diagnostics.call_bound = perfect_call_bound(cfg) + 1.0;
  if (!(tau_ms >= 0.0)) throw ValidationError("tau_ms must be nonnegative");

  MulticastCapacity local;
  if (cap == nullptr) {
    local = multicast_capacity(cfg, opt.solver);
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
    // All power to multicast; confidential transmission stops.
    pt.triple.q0 = cap->q0;
    pt.status = PointStatus::kOptimal;
    pt.outer_arg = 1.0;
    fill_diagnostics(pt, cfg.channels);
    return pt;
  }

  const double alpha_max = 1.0 + cfg.power * cfg.channels.channels[0].squaredNorm();
  const std::vector<double> grid = search::uniform_grid(1.0, alpha_max, std::exp2(cfg.search_epsilon) - 1.0);
  std::map<double, InnerSolution> solved;
  auto eval = [&](int, double alpha, const search::Hint&) {
    InnerSolution s = inner_sdp(alpha, pt.tau_prime, cfg, opt);
    ++pt.diagnostics.solver_calls;
    if (s.status == sdp::Status::kInfeasible) return search::Evaluation::infeasible();
    if (!s.feasible()) return search::Evaluation::failed();
    const double eta = s.eta;
    solved.emplace(alpha, std::move(s));
    return search::Evaluation::value(eta);
  };
  const search::Options so = outer_search_options(cfg, opt.search_mode);
  const search::Result r = search::maximize(grid, eval, so);
  if (!r.feasible) {
    const bool all_failed = r.failures == r.evaluations;
    pt.status = all_failed ? PointStatus::kFailed : PointStatus::kInfeasible;
    pt.message = all_failed ? "solver failure at every alpha" : "QoMS target infeasible";
    return pt;
  }
  const InnerSolution& best = solved.at(r.best_x);
  pt.triple = best.triple;
  pt.outer_arg = best.alpha;
  pt.secrecy_rate = std::max(0.0, std::log2(best.eta));
  pt.status = PointStatus::kOptimal;
  fill_diagnostics(pt, cfg.channels);
  return pt;
}

RegionResult region_sweep(const SystemConfig& cfg, const std::vector<double>& taus, const SchemeOptions& opt) {
  cfg.validate();
  RegionResult out;
  out.scheme = opt.artificial_noise ? "optimal" : "no-an";
  const MulticastCapacity cap = multicast_capacity(cfg, opt.solver);
  out.tau_max = cap.tau_max;
  out.total_solver_calls = cap.solver_calls;
  for (double tau : taus) {
    RatePoint pt;
    try {
      pt = qoms_srm(tau, cfg, opt, &cap);
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

RegionResult region_sweep(const SystemConfig& cfg, const SchemeOptions& opt) {
  cfg.validate();
  const MulticastCapacity cap = multicast_capacity(cfg, opt.solver);
  if (cfg.power == 0.0) return region_sweep(cfg, std::vector<double>{0.0}, opt);
  return region_sweep(cfg, tau_grid(cap.tau_max, cfg.grid_points), opt);
}

}  // namespace secrate
