#pragma once

// Worst-case secrecy rate region under norm-bounded channel errors. The
// error-ball constraints become LMIs through the S-procedure; the inner
// problem at fixed beta is quasiconcave and solved by bisection on the
// level of the worst-case objective, and beta is searched on a uniform grid.

#include <optional>
#include <vector>

#include "secrate/model.hpp"
#include "secrate/region.hpp"
#include "secrate/sdp.hpp"
#include "secrate/search.hpp"

namespace secrate {

struct RobustSettings {
  double eps = 0.01;   // outer suboptimality in bits
  double eps_b = 0.0;  // bisection tolerance; 0 selects default_bisection_tol(eps)
  /// Without AN the level enters linearly and each beta is one SDP.
  bool artificial_noise = true;
  search::Mode search_mode = search::Mode::kPruned;
  sdp::Settings solver;

  static RobustSettings from_config(const SystemConfig& cfg);
  double bisection_tol() const;
  /// Throws unless eps > 0 and 0 < eps_b < 1 - 2^-eps.
  void validate() const;
};

/// Variables referenced by the LMI builders. q0 and qa may be absent
/// (treated as zero), as may the slacks of receivers whose LMI is not
/// emitted.
struct RobustVariables {
  std::optional<sdp::Var> q0;
  sdp::Var qc;
  std::optional<sdp::Var> qa;
  std::vector<sdp::Var> t;      // receivers 2..K
  std::vector<sdp::Var> delta;  // receivers 1..K
  sdp::Var rho;
};

/// With hh = [I; h] (N+1 x N) and e the last unit vector:
///   T_k = hh ((beta-1) Qa - Qc) hh^H + diag(t_k I, -t_k eps_k^2 + beta - 1)
///   S_k = hh (Q0 - tau' (Qa + Qc)) hh^H + diag(delta_k I, -delta_k eps_k^2 - tau')
///   U   = hh_1 (Qc + (1 - level beta) Qa) hh_1^H + diag(rho I, -rho eps_1^2 + 1 - level beta)
/// The level multiplies beta, so U >= 0 certifies a worst-case objective of
/// at least `level`.
struct RobustLmis {
  std::vector<sdp::AffineHermitian> t;  // receivers 2..K
  std::vector<sdp::AffineHermitian> s;  // receivers 1..K
  sdp::AffineHermitian u{1};
};

/// Builds the blocks above. With `scalar_when_exact`, a receiver with zero
/// radius gets the 1x1 constraint obtained from the border entry with the
/// slack dropped, which is what the LMI tends to as the slack grows.
RobustLmis build_lmis(double beta, double level, double tau_prime, const ChannelSet& ch, const RobustVariables& v,
                      bool scalar_when_exact = false);

struct WorstCaseCapacity {
  double tau_max = 0.0;
  HermitianMatrix q0;
  long solver_calls = 0;
};

/// Largest multicast rate guaranteed over every error ball with all power
/// on the multicast covariance.
WorstCaseCapacity wc_multicast_capacity(const SystemConfig& cfg, const sdp::Settings& solver = {});

/// 1 + P (|h1| - eps_1)^2.
double robust_beta_max(const SystemConfig& cfg);

/// Beta grid step (2^eps (1 - eps_b) - 1) / (1 + 2^eps eps_b).
double robust_beta_step(const RobustSettings& rs);

struct RobustInnerSolution {
  sdp::Status status = sdp::Status::kNumericalFailure;
  HermitianMatrix q0, qc, qa;
  std::vector<double> t_slacks;
  std::vector<double> delta_slacks;
  double rho = 0.0;
  double beta = 0.0;
  double eta = 0.0;    // certified worst-case objective
  double level = 0.0;  // final bisection level, equal to eta
  double upper = 0.0;  // smallest level shown infeasible (or the search ceiling)
  int iterations = 0;  // level tests in the bisection
  long solver_calls = 0;

  bool feasible() const { return status == sdp::Status::kOptimal; }
  CovarianceTriple triple() const { return {q0, qc, qa}; }
};

/// eta(tau', beta) by bisection on the level over [1/beta, beta_max/beta]
/// down to eps_b, followed by a minimum-power solve at the final level to
/// recover the covariances. Without AN the level is maximized directly.
RobustInnerSolution robust_inner(double beta, double tau_prime, const SystemConfig& cfg,
                                 const RobustSettings& rs);

/// Minimum eigenvalue of every block T_k, S_k, U at a solution (scalar forms
/// for zero radii), in the order T_2..T_K, S_1..S_K, U.
std::vector<double> robust_lmi_min_eigenvalues(const RobustInnerSolution& s, double tau_prime,
                                               const ChannelSet& ch);

/// Worst-case number of level tests over the uniform beta search:
///   sum_{i=1..M_u} log2(P (|h1| - eps_1)^2 / ((1 + i Delta) eps_b)).
double robust_call_bound(const SystemConfig& cfg, const RobustSettings& rs);

RatePoint robust_qoms_srm(double tau_ms, const SystemConfig& cfg, const RobustSettings& rs,
                          const WorstCaseCapacity* cap = nullptr);

RegionResult robust_region_sweep(const SystemConfig& cfg, const RobustSettings& rs);
RegionResult robust_region_sweep(const SystemConfig& cfg, const std::vector<double>& taus, const RobustSettings& rs);

}  // namespace secrate
