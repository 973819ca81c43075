#pragma once

// Boundary points and sweeps shared by every scheme.

#include <string>
#include <vector>

#include "secrate/model.hpp"

namespace secrate {

enum class PointStatus {
  kOptimal,
  kInfeasible,  // QoMS target not achievable by this scheme
  kFailed,      // solver trouble; the sweep continues
};

const char* to_string(PointStatus s);

struct PointDiagnostics {
  double rank_ratio_qc = 0.0;  // lambda_2 / lambda_1, 0 for the zero matrix
  double rank_ratio_q0 = 0.0;
  double rank_ratio_qa = 0.0;
  double qoms_slack = 0.0;     // achieved multicast rate - tau_ms
  long solver_calls = 0;
  double call_bound = 0.0;     // worst-case number of calls for this point
};

struct RatePoint {
  double tau_ms = 0.0;
  double tau_prime = 0.0;
  double secrecy_rate = 0.0;
  double multicast_rate_achieved = 0.0;
  double outer_arg = 0.0;  // alpha, beta or rho of the selected solution
  CovarianceTriple triple;
  PointDiagnostics diagnostics;
  PointStatus status = PointStatus::kFailed;
  std::string message;
};

struct RegionResult {
  std::string scheme;
  std::vector<RatePoint> points;
  double tau_max = 0.0;
  long total_solver_calls = 0;

  int failed_points() const;
};

/// n points from 0 to tau_max inclusive; the endpoints are exact.
std::vector<double> tau_grid(double tau_max, int n);

/// lambda_2 / lambda_1 of a PSD matrix (0 when lambda_1 is 0).
double rank_ratio(const HermitianMatrix& m);

struct RankDiagnostics {
  double qc = 0.0;
  double q0 = 0.0;
  double qa = 0.0;
  bool qc_rank_one = false;
  bool q0_rank_one = false;
  bool qa_rank_one = false;  // rank <= 1
};

/// Eigenvalue ratios per block; a block counts as rank one when the ratio
/// is at most 1e-6.
RankDiagnostics rank_diagnostics(const CovarianceTriple& q);

}  // namespace secrate
