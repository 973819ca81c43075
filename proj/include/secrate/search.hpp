#pragma once

// Uniform-grid maximization of eta(x) over x_i = lo + i * step, i = 1..M,
// with the last point clamped to hi. For the problems in this library
// x * eta(x) is nondecreasing in x, so for every real x in (x_l, x_r]
//   eta(x) <= x_r * eta(x_r) / x_l.
// The pruned mode skips runs of grid points whose bound is within the
// allowed slack of the incumbent. With slack <= 1 + step / lo the result is
// within a factor 1 + step / lo of the continuous maximum, exactly like the
// exhaustive scan. An optional golden-section polish then refines the
// winning cell.

#include <functional>
#include <optional>
#include <vector>

namespace secrate::search {

enum class Mode { kPruned, kExhaustive };

/// Uniform grid over (lo, hi]: lo + step, lo + 2 step, ..., hi.
std::vector<double> uniform_grid(double lo, double hi, double step);

struct Evaluation {
  enum class Kind { kValue, kInfeasible, kFailed };
  Kind kind = Kind::kFailed;
  double lower = 0.0;  // certified value of eta at this point
  double upper = 0.0;  // upper bound on eta at this point (>= lower)

  static Evaluation value(double v) { return {Kind::kValue, v, v}; }
  static Evaluation bracket(double lo, double hi) { return {Kind::kValue, lo, hi}; }
  static Evaluation infeasible() { return {Kind::kInfeasible, 0.0, 0.0}; }
  static Evaluation failed() { return {Kind::kFailed, 0.0, 0.0}; }
};

/// Context handed to the evaluator. Polish evaluations use index -1.
/// `floor` is a certified lower bound on eta at this point (from
/// monotonicity), `ceiling` an upper bound, and `incumbent` the best
/// certified value so far. An evaluator may stop as soon as it proves
/// eta <= `prune_target` and return a bracket with that upper value: the
/// search then needs nothing more from this point. 0 means no target.
struct Hint {
  double floor = 0.0;
  double ceiling = 0.0;
  double incumbent = 0.0;
  double prune_target = 0.0;
  int floor_source = -1;  // grid index certifying `floor`, -1 if none
};

using Evaluator = std::function<Evaluation(int index, double x, const Hint& hint)>;

struct Result {
  bool feasible = false;
  int best_index = -1;  // best grid point, or -1 when a polish point won
  double best_x = 0.0;
  double best_value = 0.0;
  int evaluations = 0;
  int failures = 0;
  std::vector<int> evaluated;  // indices in evaluation order
};

struct Options {
  Mode mode = Mode::kPruned;
  /// Relative tolerance for ties between evaluated values.
  double rel_tol = 1e-9;
  /// A run of grid points is skipped once its bound is at most
  /// incumbent * prune_slack.
  double prune_slack = 1.0 + 1e-9;
  /// Left end of the search interval (excluded from the grid); defaults to
  /// the first grid point.
  std::optional<double> left_edge;
  /// Golden-section refinement of the best cell down to this relative
  /// width in x; 0 disables it.
  double polish_tol = 0.0;
};

Result maximize(const std::vector<double>& grid, const Evaluator& eval, const Options& opt = {});

}  // namespace secrate::search
