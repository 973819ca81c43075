#pragma once

// Batch runs: every (scheme, power) combination of a scenario, written as
// one CSV each plus a JSON summary.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "secrate/region.hpp"
#include "secrate/robust_region.hpp"
#include "secrate/scenario.hpp"

namespace secrate {

/// optimal, robust, power-split, lower-bound, no-an, tdma, nonrobust.
const std::vector<std::string>& known_schemes();

/// Unset fields fall back to the scenario file, then to the library defaults.
struct RunSpec {
  std::string scenario_path;
  std::vector<std::string> schemes;
  std::vector<double> power_db;
  std::optional<int> grid_points;
  std::optional<double> eps;
  std::optional<double> eps_b;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool dump_covariances = false;
  int workers = 1;
};

/// Runs one scheme. "optimal" ignores the radii; power-split, no-an and tdma
/// use their worst-case forms when any radius is positive.
RegionResult run_scheme(const std::string& scheme, const SystemConfig& cfg, const RobustSettings& rs);

/// Header plus one row per point, numbers at 9 significant digits.
void write_csv(const RegionResult& r, std::ostream& out);

/// Linear interpolation of the optimal points' secrecy rate in the multicast
/// rate, min(tau_ms, achieved); 0 beyond the last point.
double boundary_at(const RegionResult& r, double tau);

struct RunOutcome {
  int exit_code = 1;  // 0 success, 2 some points failed, 1 fatal
  std::vector<std::string> files;
};

/// Fatal errors (bad scenario, bad flags, unwritable output) are reported on
/// `log` and give exit code 1.
RunOutcome run(const RunSpec& spec, std::ostream& log);

}  // namespace secrate
