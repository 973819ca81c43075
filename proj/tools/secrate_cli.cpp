// Command-line front end: runs the selected schemes of a scenario file and
// writes one CSV per (scheme, power) plus summary.json.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "secrate/run.hpp"

namespace {

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::string cur;
    for (char c : item) {
      if (c == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secrecy rate regions of AN-aided multicast with confidential messages"};
  secrate::RunSpec spec;
  std::vector<std::string> schemes;
  std::string powers;
  int grid = 0;
  double eps = 0.0;
  double eps_b = -1.0;
  std::uint64_t seed = 0;

  app.add_option("--scenario", spec.scenario_path, "Scenario file")->required();
  app.add_option("--schemes", schemes, "Comma-separated subset of: optimal, robust, power-split, lower-bound, "
                                       "no-an, tdma, nonrobust (default: the scenario's list)");
  app.add_option("--power-db", powers, "Comma-separated transmit powers in dB (default: the scenario's list)");
  auto* grid_opt = app.add_option("--grid", grid, "Multicast-rate grid points")->check(CLI::Range(2, 100000));
  auto* eps_opt = app.add_option("--eps", eps, "Outer search suboptimality in bits")->check(CLI::PositiveNumber);
  auto* eps_b_opt = app.add_option("--eps-b", eps_b, "Bisection tolerance (0 for the default)")
                        ->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Ball-sampling seed for the soundness check");
  app.add_option("--out", spec.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--dump-covariances", spec.dump_covariances, "Write per-point covariances as JSON");
  app.add_option("--workers", spec.workers, "Concurrent (scheme, power) runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  spec.schemes = split_commas(schemes);
  if (!schemes.empty() && spec.schemes.empty()) {
    std::cerr << "error: no schemes selected\n";
    return 1;
  }
  for (const std::string& p : split_commas({powers})) {
    try {
      std::size_t used = 0;
      spec.power_db.push_back(std::stod(p, &used));
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::exception&) {
      std::cerr << "error: bad power '" << p << "'\n";
      return 1;
    }
  }
  if (*grid_opt) spec.grid_points = grid;
  if (*eps_opt) spec.eps = eps;
  if (*eps_b_opt) spec.eps_b = eps_b;
  if (*seed_opt) spec.seed = seed;

  const secrate::RunOutcome outcome = secrate::run(spec, std::cerr);
  return outcome.exit_code;
}
