#include "secrate/region.hpp"

#include <algorithm>

namespace secrate {

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::kOptimal: return "optimal";
    case PointStatus::kInfeasible: return "infeasible";
    case PointStatus::kFailed: return "failed";
  }
  return "unknown";
}

int RegionResult::failed_points() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(),
                                        [](const RatePoint& p) { return p.status == PointStatus::kFailed; }));
}

std::vector<double> tau_grid(double tau_max, int n) {
  if (n < 2) throw ValidationError("grid needs at least two points");
  if (!(tau_max >= 0.0)) throw ValidationError("tau_max must be nonnegative");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = tau_max * static_cast<double>(i) / (n - 1);
  out.front() = 0.0;
  out.back() = tau_max;
  return out;
}

double rank_ratio(const HermitianMatrix& m) {
  if (m.dim() < 2) return 0.0;
  const Eigen::VectorXd ev = m.eigenvalues();
  const double l1 = ev(ev.size() - 1);
  if (l1 <= 0.0) return 0.0;
  return std::max(0.0, ev(ev.size() - 2)) / l1;
}

RankDiagnostics rank_diagnostics(const CovarianceTriple& q) {
  RankDiagnostics d;
  d.qc = rank_ratio(q.qc);
  d.q0 = rank_ratio(q.q0);
  d.qa = rank_ratio(q.qa);
  d.qc_rank_one = d.qc <= 1e-6;
  d.q0_rank_one = d.q0 <= 1e-6;
  d.qa_rank_one = d.qa <= 1e-6;
  return d;
}

}  // namespace secrate
