#pragma once

// System model: channels, power budget, transmit covariances and the
// achievable rates they induce, both for known channels and over
// norm-bounded channel-error balls.

#include <cstdint>
#include <utility>
#include <vector>

#include "secrate/hermitian.hpp"

namespace secrate {

/// Estimated channels h_1..h_K (receiver 1 is the legitimate receiver of the
/// confidential message) and the radius of each receiver's error ball.
struct ChannelSet {
  int n_tx = 0;
  std::vector<CRowVector> channels;
  std::vector<double> radii;  // empty or all zero for perfect CSI

  int size() const { return static_cast<int>(channels.size()); }
  double radius(int k) const { return radii.empty() ? 0.0 : radii[k]; }
  bool perfect() const;
  /// Copy with every radius set to zero.
  ChannelSet nominal() const;
  /// Throws ValidationError on shape errors, radii >= channel norm, or
  /// fewer than `min_receivers` channels.
  void validate(int min_receivers = 2) const;
};

struct SystemConfig {
  ChannelSet channels;
  double power = 0.0;           // linear scale, unit noise variance
  double search_epsilon = 0.01; // outer search suboptimality in bits
  double bisection_tol = 0.0;   // 0 selects default_bisection_tol(search_epsilon)
  int grid_points = 25;

  double eps_b() const;
  void validate(int min_receivers = 2) const;
};

/// min(1e-4, (1 - 2^-eps) / 10).
double default_bisection_tol(double eps);

double db_to_linear(double db);

/// Multicast, confidential and artificial-noise covariances.
struct CovarianceTriple {
  HermitianMatrix q0;
  HermitianMatrix qc;
  HermitianMatrix qa;

  static CovarianceTriple zero(int n_tx);
  double total_power() const { return q0.trace() + qc.trace() + qa.trace(); }
  /// Re-Hermitianized copy with negative eigenvalues clipped to zero.
  CovarianceTriple clipped() const;
};

struct RateBreakdown {
  std::vector<double> multicast_per_rx;  // K entries
  double legit_rate = 0.0;
  std::vector<double> eaves_per_rx;      // receivers 2..K
  double multicast_rate = 0.0;
  double secrecy_rate = 0.0;             // clamped at 0
};

/// Rank reduction: a PSD matrix of lowest reachable rank with the same
/// trace and the same h X h^H for every h in `hs`. Each step moves along a
/// direction that keeps those values fixed until an eigenvalue hits zero.
HermitianMatrix reduce_rank(const HermitianMatrix& x, const std::vector<CRowVector>& hs);

/// Rates with the channels taken as exact (radii ignored).
RateBreakdown rates(const CovarianceTriple& q, const ChannelSet& ch);

/// Sampled worst case over each receiver's ball: `n_samples` uniform error
/// vectors per receiver plus e = 0 and the two radial extremes. The result
/// is an outer estimate of the true worst case.
RateBreakdown worst_case_eval(const CovarianceTriple& q, const ChannelSet& ch,
                              int n_samples = 10000, std::uint64_t seed = 1);

/// Worst case over explicit error vectors, errors[k] for receiver k.
/// e = 0 is always included.
RateBreakdown worst_case_eval_at(const CovarianceTriple& q, const ChannelSet& ch,
                                 const std::vector<std::vector<CRowVector>>& errors);

/// Exact worst case: each entry is a ratio of quadratic forms optimized
/// over the ball, solved as a trust-region subproblem inside a Dinkelbach
/// iteration.
RateBreakdown exact_worst_case(const CovarianceTriple& q, const ChannelSet& ch);

/// ((|h| - eps)^2, (|h| + eps)^2): the extremes of |h + e|^2 over |e| <= eps.
std::pair<double, double> ball_extremes(const CRowVector& h, double eps);

/// Extremes of (h A h^H) / (1 + h B h^H) over h = hc + e, |e| <= eps.
/// A and B must be PSD.
struct RatioExtreme {
  double value;
  CRowVector error;  // an optimal e
};
RatioExtreme min_ratio_over_ball(const CRowVector& hc, double eps, const HermitianMatrix& a,
                                 const HermitianMatrix& b);
RatioExtreme max_ratio_over_ball(const CRowVector& hc, double eps, const HermitianMatrix& a,
                                 const HermitianMatrix& b);

/// Uniform samples from the complex unit ball of dimension n.
std::vector<CRowVector> sample_unit_ball(int n, int count, std::uint64_t seed);

}  // namespace secrate
