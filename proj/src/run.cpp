#include "secrate/run.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "secrate/perfect_region.hpp"
#include "secrate/suboptimal.hpp"

namespace secrate {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kDominanceSlack = 1e-4;
constexpr int kSoundnessSamples = 10000;

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string power_tag(double db) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%gdB", db);
  return buf;
}

double multicast_coordinate(const RatePoint& p) { return std::min(p.tau_ms, p.multicast_rate_achieved); }

json matrix_json(const HermitianMatrix& m) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json rr = json::array(), ir = json::array();
    for (int j = 0; j < m.dim(); ++j) {
      rr.push_back(m(i, j).real());
      ir.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  return {{"re", re}, {"im", im}};
}

json covariances_json(const RegionResult& r, double db) {
  json pts = json::array();
  for (const RatePoint& p : r.points) {
    pts.push_back({{"tau_ms", p.tau_ms},
                   {"outer_arg", p.outer_arg},
                   {"status", to_string(p.status)},
                   {"q0", matrix_json(p.triple.q0)},
                   {"qc", matrix_json(p.triple.qc)},
                   {"qa", matrix_json(p.triple.qa)}});
  }
  return {{"scheme", r.scheme}, {"power_db", db}, {"points", pts}};
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct Job {
  std::string scheme;
  double db = 0.0;
  RegionResult result;
  double seconds = 0.0;
  std::string error;
};

json scheme_summary(const Job& job, const ChannelSet& ch, bool robust, std::uint64_t seed) {
  const RegionResult& r = job.result;
  double bound_total = 0.0;
  long max_calls = 0;
  double worst_ratio = 0.0;
  bool within = true;
  for (const RatePoint& p : r.points) {
    bound_total += p.diagnostics.call_bound;
    max_calls = std::max(max_calls, p.diagnostics.solver_calls);
    if (p.diagnostics.call_bound > 0.0) {
      worst_ratio = std::max(worst_ratio, p.diagnostics.solver_calls / p.diagnostics.call_bound);
    }
    within = within && p.diagnostics.solver_calls <= p.diagnostics.call_bound;
  }
  json s = {{"csv", job.scheme + "_" + power_tag(job.db) + ".csv"},
            {"points", r.points.size()},
            {"failed_points", r.failed_points()},
            {"tau_max", r.tau_max},
            {"seconds", job.seconds},
            {"solver_calls", {{"total", r.total_solver_calls},
                              {"bound_total", bound_total},
                              {"max_per_point", max_calls},
                              {"max_ratio_to_bound", worst_ratio},
                              {"within_bound", within}}}};
  // Worst-case designs are checked against sampled channel errors; points
  // with a zero rate say nothing.
  if (robust && job.scheme != "optimal") {
    double secrecy_margin = std::numeric_limits<double>::infinity();
    double multicast_margin = std::numeric_limits<double>::infinity();
    for (const RatePoint& p : r.points) {
      if (p.status != PointStatus::kOptimal) continue;
      const RateBreakdown w = worst_case_eval(p.triple, ch, kSoundnessSamples, seed);
      if (p.secrecy_rate > 0.0) secrecy_margin = std::min(secrecy_margin, w.secrecy_rate - p.secrecy_rate);
      if (p.multicast_rate_achieved > 0.0) {
        multicast_margin = std::min(multicast_margin, w.multicast_rate - p.multicast_rate_achieved);
      }
    }
    json check = {{"samples", kSoundnessSamples}, {"seed", seed}};
    if (std::isfinite(secrecy_margin)) check["min_secrecy_margin"] = secrecy_margin;
    if (std::isfinite(multicast_margin)) check["min_multicast_margin"] = multicast_margin;
    s["sampled_soundness"] = check;
  }
  return s;
}

struct Excess {
  double worst = -std::numeric_limits<double>::infinity();
  double at = 0.0;
  int count = 0;

  void add(double tau, double excess) {
    ++count;
    if (excess > worst) {
      worst = excess;
      at = tau;
    }
  }
  json to_json() const {
    if (count == 0) return {{"points", 0}};
    return {{"points", count}, {"max_excess", worst}, {"at_tau_ms", at}};
  }
};

// Lower points at a target the upper sweep also solved are compared exactly;
// the rest against the interpolated upper boundary, which understates it
// where the boundary is concave between grid points.
json dominance_json(const RegionResult& upper, const RegionResult& lower) {
  Excess shared, interpolated;
  for (const RatePoint& p : lower.points) {
    if (p.status != PointStatus::kOptimal) continue;
    const double tau = multicast_coordinate(p);
    const RatePoint* match = nullptr;
    for (const RatePoint& q : upper.points) {
      if (q.status == PointStatus::kOptimal && std::abs(q.tau_ms - tau) <= 1e-9 * std::max(1.0, tau)) {
        match = &q;
        break;
      }
    }
    if (match != nullptr) {
      shared.add(tau, p.secrecy_rate - match->secrecy_rate);
    } else {
      interpolated.add(tau, p.secrecy_rate - boundary_at(upper, tau));
    }
  }
  // The verdict rests on the exact comparisons whenever there are any.
  const Excess& basis = shared.count > 0 ? shared : interpolated;
  return {{"upper", upper.scheme},
          {"lower", lower.scheme},
          {"shared", shared.to_json()},
          {"interpolated", interpolated.to_json()},
          {"slack", kDominanceSlack},
          {"basis", shared.count > 0 ? "shared" : "interpolated"},
          {"holds", basis.count == 0 || basis.worst <= kDominanceSlack}};
}

// Pairs (upper, lower) expected to be nested regions.
std::vector<std::pair<std::string, std::string>> dominance_pairs(bool robust) {
  const std::string top = robust ? "robust" : "optimal";
  std::vector<std::pair<std::string, std::string>> pairs;
  if (robust) pairs.emplace_back("optimal", "robust");
  for (const char* s : {"power-split", "lower-bound", "no-an", "tdma", "nonrobust"}) {
    pairs.emplace_back(top, s);
  }
  pairs.emplace_back("power-split", "no-an");
  pairs.emplace_back("no-an", "tdma");
  return pairs;
}

}  // namespace

const std::vector<std::string>& known_schemes() {
  static const std::vector<std::string> names = {"optimal", "robust",    "power-split", "lower-bound",
                                                 "no-an",   "tdma",      "nonrobust"};
  return names;
}

RegionResult run_scheme(const std::string& scheme, const SystemConfig& cfg, const RobustSettings& rs) {
  const bool robust = !cfg.channels.perfect();
  SystemConfig nominal = cfg;
  nominal.channels = cfg.channels.nominal();
  SchemeOptions perfect;
  perfect.search_mode = rs.search_mode;
  perfect.solver = rs.solver;
  if (scheme == "optimal") return region_sweep(nominal, perfect);
  if (scheme == "robust") return robust_region_sweep(cfg, rs);
  if (scheme == "power-split") return power_split_region(robust ? cfg : nominal, robust, rho_grid(), rs);
  if (scheme == "lower-bound") return lower_bound_region(cfg, rs);
  if (scheme == "no-an") return no_an_region(robust ? cfg : nominal, robust, rs);
  if (scheme == "tdma") return tdma_region(robust ? cfg : nominal, robust, rs);
  if (scheme == "nonrobust") return nonrobust_eval(cfg, perfect);
  throw ValidationError("unknown scheme '" + scheme + "'");
}

void write_csv(const RegionResult& r, std::ostream& out) {
  out << "tau_ms,secrecy_rate,multicast_rate_achieved,qoms_slack,rank_ratio_Qc,rank_ratio_Q0,rank_ratio_Qa,"
         "solver_calls,status\n";
  for (const RatePoint& p : r.points) {
    const PointDiagnostics& d = p.diagnostics;
    out << fmt9(p.tau_ms) << ',' << fmt9(p.secrecy_rate) << ',' << fmt9(p.multicast_rate_achieved) << ','
        << fmt9(d.qoms_slack) << ',' << fmt9(d.rank_ratio_qc) << ',' << fmt9(d.rank_ratio_q0) << ','
        << fmt9(d.rank_ratio_qa) << ',' << d.solver_calls << ',' << to_string(p.status) << '\n';
  }
}

double boundary_at(const RegionResult& r, double tau) {
  std::vector<std::pair<double, double>> pts;
  for (const RatePoint& p : r.points) {
    if (p.status == PointStatus::kOptimal) pts.emplace_back(multicast_coordinate(p), p.secrecy_rate);
  }
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end());
  if (tau <= pts.front().first) return pts.front().second;
  if (tau > pts.back().first) return 0.0;
  const auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(tau, -std::numeric_limits<double>::infinity()));
  const auto lo = hi - 1;
  if (hi->first == lo->first) return std::max(hi->second, lo->second);
  const double w = (tau - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

RunOutcome run(const RunSpec& spec, std::ostream& log) {
  RunOutcome outcome;
  Scenario sc;
  try {
    sc = load_scenario(spec.scenario_path);
  } catch (const ScenarioError& e) {
    log << "error: " << e.what() << '\n';
    return outcome;
  }

  const std::vector<std::string> schemes = spec.schemes.empty() ? sc.schemes : spec.schemes;
  const std::vector<double> powers = spec.power_db.empty() ? sc.power_db : spec.power_db;
  if (schemes.empty()) {
    log << "error: no schemes selected\n";
    return outcome;
  }
  for (const std::string& s : schemes) {
    if (std::find(known_schemes().begin(), known_schemes().end(), s) == known_schemes().end()) {
      log << "error: unknown scheme '" << s << "'\n";
      return outcome;
    }
    if (std::count(schemes.begin(), schemes.end(), s) > 1) {
      log << "error: scheme '" << s << "' listed twice\n";
      return outcome;
    }
  }
  if (powers.empty()) {
    log << "error: no transmit power given\n";
    return outcome;
  }
  for (double db : powers) {
    if (!std::isfinite(db)) {
      log << "error: powers must be finite\n";
      return outcome;
    }
  }
  if (spec.workers < 1) {
    log << "error: workers must be at least 1\n";
    return outcome;
  }

  SystemConfig base;
  base.channels = sc.channels;
  base.grid_points = spec.grid_points.value_or(sc.grid_points.value_or(base.grid_points));
  base.search_epsilon = spec.eps.value_or(sc.eps.value_or(base.search_epsilon));
  base.bisection_tol = spec.eps_b.value_or(sc.eps_b.value_or(0.0));
  const std::uint64_t seed = spec.seed.value_or(sc.seed.value_or(1));
  const bool robust = !sc.channels.perfect();
  try {
    SystemConfig probe = base;
    probe.power = db_to_linear(powers.front());
    probe.validate();
    RobustSettings::from_config(probe).validate();
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return outcome;
  }

  const fs::path out_dir(spec.out_dir);
  try {
    fs::create_directories(out_dir);
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return outcome;
  }

  std::vector<Job> jobs;
  for (double db : powers) {
    for (const std::string& s : schemes) jobs.push_back({s, db, {}, 0.0, {}});
  }
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Job& job = jobs[i];
      SystemConfig cfg = base;
      cfg.power = db_to_linear(job.db);
      const auto start = std::chrono::steady_clock::now();
      try {
        job.result = run_scheme(job.scheme, cfg, RobustSettings::from_config(cfg));
        const fs::path stem = out_dir / (job.scheme + "_" + power_tag(job.db));
        std::ostringstream csv;
        write_csv(job.result, csv);
        write_atomically(stem.string() + ".csv", csv.str());
        if (spec.dump_covariances) {
          write_atomically(stem.string() + "_covariances.json", covariances_json(job.result, job.db).dump(1) + "\n");
        }
      } catch (const std::exception& e) {
        job.error = e.what();
      }
      job.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::lock_guard<std::mutex> lock(log_mutex);
      if (job.error.empty()) {
        log << job.scheme << " at " << power_tag(job.db) << ": " << job.result.points.size() << " points, "
            << job.result.failed_points() << " failed, " << job.result.total_solver_calls << " solver calls, "
            << fmt9(job.seconds) << " s\n";
      } else {
        log << "error: " << job.scheme << " at " << power_tag(job.db) << ": " << job.error << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(spec.workers, static_cast<int>(jobs.size()));
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  bool fatal = false;
  bool partial = false;
  json runs = json::array();
  for (double db : powers) {
    json per_scheme = json::object();
    std::map<std::string, const RegionResult*> done;
    for (const Job& job : jobs) {
      if (job.db != db) continue;
      if (!job.error.empty()) {
        fatal = true;
        per_scheme[job.scheme] = {{"error", job.error}};
        continue;
      }
      partial = partial || job.result.failed_points() > 0;
      per_scheme[job.scheme] = scheme_summary(job, sc.channels, robust, seed);
      done[job.scheme] = &job.result;
      outcome.files.push_back((out_dir / (job.scheme + "_" + power_tag(db) + ".csv")).string());
    }
    json dominance = json::array();
    for (const auto& [upper, lower] : dominance_pairs(robust)) {
      if (done.count(upper) && done.count(lower)) dominance.push_back(dominance_json(*done[upper], *done[lower]));
    }
    runs.push_back({{"power_db", db}, {"power", db_to_linear(db)}, {"schemes", per_scheme}, {"dominance", dominance}});
  }

  outcome.exit_code = fatal ? 1 : (partial ? 2 : 0);
  json receivers = json::array();
  for (int k = 0; k < sc.channels.size(); ++k) {
    json re = json::array(), im = json::array();
    for (int i = 0; i < sc.channels.n_tx; ++i) {
      re.push_back(sc.channels.channels[k](i).real());
      im.push_back(sc.channels.channels[k](i).imag());
    }
    receivers.push_back({{"re", re}, {"im", im}, {"radius", sc.channels.radius(k)}});
  }
  const json summary = {{"config",
                         {{"scenario", spec.scenario_path},
                          {"n_tx", sc.channels.n_tx},
                          {"receivers", receivers},
                          {"schemes", schemes},
                          {"power_db", powers},
                          {"grid_points", base.grid_points},
                          {"eps", base.search_epsilon},
                          {"eps_b", base.eps_b()},
                          {"seed", seed},
                          {"workers", spec.workers}}},
                        {"runs", runs},
                        {"exit_code", outcome.exit_code}};
  try {
    write_atomically(out_dir / "summary.json", summary.dump(2) + "\n");
    outcome.files.push_back((out_dir / "summary.json").string());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    outcome.exit_code = 1;
  }
  return outcome;
}

}  // namespace secrate
