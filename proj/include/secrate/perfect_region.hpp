#pragma once

// Perfect-CSI secrecy rate region: multicast capacity, the
// QoMS-constrained secrecy rate maximization (Charnes-Cooper SDP inside a
// uniform alpha search) and the boundary sweep over the QoMS target.

#include <optional>
#include <vector>

#include "secrate/model.hpp"
#include "secrate/region.hpp"
#include "secrate/sdp.hpp"
#include "secrate/search.hpp"

namespace secrate {

struct SchemeOptions {
  bool artificial_noise = true;
  search::Mode search_mode = search::Mode::kPruned;
  sdp::Settings solver;
};

struct MulticastCapacity {
  double tau_max = 0.0;
  HermitianMatrix q0;
  long solver_calls = 0;
};

/// max_Q0 min_k log2(1 + h_k Q0 h_k^H) subject to Tr(Q0) <= P. Accepts a
/// single channel.
MulticastCapacity multicast_capacity(const SystemConfig& cfg, const sdp::Settings& solver = {});

/// One Charnes-Cooper SDP at fixed alpha. eta is the optimal value of
///   (1 + h1 (Qc + Qa) h1^H) / (alpha (1 + h1 Qa h1^H))
/// under the eavesdropper and QoMS constraints.
struct InnerSolution {
  sdp::Status status = sdp::Status::kNumericalFailure;
  HermitianMatrix z, gamma, phi;
  double xi = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  CovarianceTriple triple;

  bool feasible() const { return status == sdp::Status::kOptimal; }
};

InnerSolution inner_sdp(double alpha, double tau_prime, const SystemConfig& cfg,
                        const SchemeOptions& opt = {});

/// The same eta obtained by bisection on the level of the fractional
/// objective, one SDP per level. Returns nullopt when the QoMS target is
/// infeasible.
struct OracleResult {
  double eta = 0.0;
  int solves = 0;
};
std::optional<OracleResult> quasiconvex_oracle(double alpha, double tau_prime, const SystemConfig& cfg,
                                               const SchemeOptions& opt = {}, double rel_tol = 1e-8);

/// Outer search settings shared by the alpha and beta searches: prune
/// within a quarter of eps, then polish the best cell.
search::Options outer_search_options(const SystemConfig& cfg, search::Mode mode);

/// P |h1|^2 / (2^eps - 1): the number of alpha samples in the uniform search.
double perfect_call_bound(const SystemConfig& cfg);

/// Secrecy rate maximization at QoMS target tau_ms. `cap` may pass a
/// precomputed multicast capacity.
RatePoint qoms_srm(double tau_ms, const SystemConfig& cfg, const SchemeOptions& opt = {},
                   const MulticastCapacity* cap = nullptr);

/// Sweep over cfg.grid_points uniform targets in [0, tau_max].
RegionResult region_sweep(const SystemConfig& cfg, const SchemeOptions& opt = {});
/// Sweep over explicit targets; targets above tau_max come back infeasible.
RegionResult region_sweep(const SystemConfig& cfg, const std::vector<double>& taus, const SchemeOptions& opt);

}  // namespace secrate
