#pragma once

// Suboptimal schemes and baselines, each producing a RegionResult that can
// be compared with the optimal sweeps: power splitting, the robust lower
// bound, no artificial noise, TDMA and the nonrobust design.

#include <vector>

#include "secrate/model.hpp"
#include "secrate/perfect_region.hpp"
#include "secrate/region.hpp"
#include "secrate/robust_region.hpp"

namespace secrate {

/// n uniform points on [0, 1] with exact endpoints.
std::vector<double> rho_grid(int n = 51);

/// Largest SINR t such that every receiver over its error ball sees
/// h Q0 h^H >= t (1 + h W h^H) with Tr(Q0) <= power, where W is the fixed
/// interference covariance. One SDP; t enters the S-procedure LMIs affinely.
struct MulticastShare {
  double sinr = 0.0;
  HermitianMatrix q0;
  long solver_calls = 0;
};
MulticastShare multicast_share(const ChannelSet& ch, double power, const HermitianMatrix& interference,
                               const sdp::Settings& solver = {});

struct PowerSplitPoint {
  double rho = 0.0;
  double rc = 0.0;  // secrecy rate with power rho P
  double r0 = 0.0;  // multicast rate with the remaining power
  CovarianceTriple triple;
  PointStatus status = PointStatus::kFailed;
  std::string message;
  long solver_calls = 0;
};

/// Rc(rho) from the SRM at zero QoMS with power rho P (worst case when
/// `robust`), then R0(rho) = log2(1 + t) from multicast_share with power
/// (1 - rho) P and the secrecy covariances as interference.
PowerSplitPoint power_split_point(double rho, const SystemConfig& cfg, bool robust, const RobustSettings& rs);

/// One point per rho, in the order given: tau_ms and the achieved multicast
/// rate are R0, secrecy_rate is Rc and outer_arg is rho.
RegionResult power_split_region(const SystemConfig& cfg, bool robust, const std::vector<double>& rhos,
                                const RobustSettings& rs);

/// The power-split boundary at a multicast target: the largest rho with
/// R0(rho) >= tau, found by bisection on rho down to `rho_tol` (R0 falls and
/// Rc rises with rho). secrecy_rate is Rc there, outer_arg is rho.
RatePoint power_split_at(double tau, const SystemConfig& cfg, bool robust, const RobustSettings& rs,
                         double rho_tol = 1e-6);

/// Charnes-Cooper variables of the lower-bound problem at fixed beta:
/// Q = X / xi for each covariance, slacks likewise scaled by xi.
struct LowerBoundSolution {
  sdp::Status status = sdp::Status::kNumericalFailure;
  HermitianMatrix z, gamma, phi;
  double xi = 0.0;
  double a = 0.0;  // lower bound on eta(tau', beta)
  std::vector<double> lambda_slacks;  // receivers 2..K
  std::vector<double> mu_slacks;      // receivers 1..K
  double beta = 0.0;
  CovarianceTriple triple;

  bool feasible() const { return status == sdp::Status::kOptimal; }
};

/// Maximizes (1 + min h1 (Qc + Qa) h1^H) / (beta (1 + max h1 Qa h1^H)) over
/// the error ball of receiver 1 under the robust eavesdropper, QoMS and
/// power constraints, as one SDP. `artificial_noise` false forces Qa = 0.
LowerBoundSolution lower_bound_inner(double beta, double tau_prime, const SystemConfig& cfg,
                                     bool artificial_noise = true, const sdp::Settings& solver = {});

/// (beta_max - 1) / (2^eps - 1): the number of beta samples.
double lower_bound_call_bound(const SystemConfig& cfg);

RatePoint lower_bound_srm(double tau_ms, const SystemConfig& cfg, const RobustSettings& rs,
                          const WorstCaseCapacity* cap = nullptr);
RegionResult lower_bound_region(const SystemConfig& cfg, const RobustSettings& rs);
RegionResult lower_bound_region(const SystemConfig& cfg, const std::vector<double>& taus, const RobustSettings& rs);

/// The optimal sweeps with the AN covariance fixed to zero.
RegionResult no_an_region(const SystemConfig& cfg, bool robust, const RobustSettings& rs);

/// Half of each corner (zero-QoMS secrecy rate, multicast capacity), joined
/// by a segment sampled at cfg.grid_points targets in [0, tau_max / 2].
RegionResult tdma_region(const SystemConfig& cfg, bool robust, const RobustSettings& rs);

/// Perfect-CSI design on the estimated channels, scored by its exact worst
/// case over the error balls: secrecy_rate and multicast_rate_achieved are
/// worst-case values, tau_ms stays the nominal target.
RegionResult nonrobust_eval(const SystemConfig& cfg, const SchemeOptions& opt = {});

/// Largest secrecy rate among optimal points whose achieved multicast rate
/// is at least tau: the region's boundary at tau, since lowering the
/// multicast rate is always possible.
double achievable_secrecy(const RegionResult& r, double tau);

}  // namespace secrate
