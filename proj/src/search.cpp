#include "secrate/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "secrate/hermitian.hpp"

namespace secrate::search {

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("invalid search grid");
  std::vector<double> out;
  if (hi == lo) {
    out.push_back(hi);
    return out;
  }
  const auto count = static_cast<long>(std::ceil((hi - lo) / step - 1e-12));
  if (count > 50'000'000) throw ValidationError("search grid too large");
  out.reserve(count);
  for (long i = 1; i <= count; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  out.back() = hi;
  return out;
}

namespace {

struct State {
  Evaluation::Kind kind = Evaluation::Kind::kFailed;
  bool done = false;
  double lower = 0.0;
  double upper = 0.0;
};

// A run of unevaluated indices [first, last] whose values are bounded by
// the anchor to the right.
struct Interval {
  int first;
  int last;
  int anchor;  // evaluated index > last with a value
  double bound;
  bool operator<(const Interval& o) const { return bound < o.bound; }
};

// Golden-section search over the cells next to the best grid point.
void polish(const std::vector<double>& grid, const Evaluator& eval, const Options& opt, Result& res) {
  const int b = res.best_index;
  const int n = static_cast<int>(grid.size());
  double a = b > 0 ? grid[b - 1] : std::min(opt.left_edge.value_or(grid[0]), grid[0]);
  double c = b + 1 < n ? grid[b + 1] : grid[b];
  const double width = opt.polish_tol * grid[b];
  auto f = [&](double x) {
    const double inf = std::numeric_limits<double>::infinity();
    const Evaluation e = eval(-1, x, Hint{0.0, inf, res.best_value, res.best_value * (1.0 + opt.rel_tol), -1});
    ++res.evaluations;
    if (e.kind == Evaluation::Kind::kFailed) ++res.failures;
    if (e.kind != Evaluation::Kind::kValue) return -std::numeric_limits<double>::infinity();
    if (e.lower > res.best_value * (1.0 + opt.rel_tol)) {
      res.best_value = e.lower;
      res.best_x = x;
      res.best_index = -1;
    }
    return e.lower;
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = c - g * (c - a), x2 = a + g * (c - a);
  double f1 = f(x1), f2 = f(x2);
  while (c - a > width) {
    if (f1 >= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - g * (c - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (c - a);
      f2 = f(x2);
    }
  }
}

}  // namespace

Result maximize(const std::vector<double>& grid, const Evaluator& eval, const Options& opt) {
  Result res;
  const int n = static_cast<int>(grid.size());
  if (n == 0) return res;
  std::vector<State> st(n);
  double incumbent = 0.0;
  bool have = false;

  // Largest evaluated index below i holding a value.
  auto left_value = [&](int i) {
    for (int j = i - 1; j >= 0; --j) {
      if (st[j].done && st[j].kind == Evaluation::Kind::kValue) return j;
    }
    return -1;
  };
  auto right_value = [&](int i) {
    for (int j = i + 1; j < n; ++j) {
      if (st[j].done && st[j].kind == Evaluation::Kind::kValue) return j;
    }
    return -1;
  };
  auto run = [&](int i, double prune_target) {
    Hint h;
    h.prune_target = prune_target;
    const double x = grid[i];
    const int l = left_value(i);
    const int r = right_value(i);
    h.floor = l >= 0 ? grid[l] * st[l].lower / x : 0.0;
    h.floor_source = l;
    h.ceiling = r >= 0 ? grid[r] * st[r].upper / x : std::numeric_limits<double>::infinity();
    h.incumbent = have ? incumbent : 0.0;
    const Evaluation e = eval(i, x, h);
    ++res.evaluations;
    res.evaluated.push_back(i);
    st[i].done = true;
    st[i].kind = e.kind;
    st[i].lower = e.lower;
    st[i].upper = std::max(e.lower, e.upper);
    if (e.kind == Evaluation::Kind::kFailed) ++res.failures;
    if (e.kind == Evaluation::Kind::kValue && (!have || e.lower > incumbent)) {
      incumbent = e.lower;
      have = true;
    }
    return e.kind;
  };

  if (opt.mode == Mode::kExhaustive) {
    for (int i = 0; i < n; ++i) run(i, 0.0);
  } else {
    // Anchor at the top of the grid. Infeasibility there means the whole
    // grid is infeasible because the feasible set grows with x.
    int anchor = n - 1;
    while (anchor >= 0) {
      const auto k = run(anchor, 0.0);
      if (k == Evaluation::Kind::kValue) break;
      if (k == Evaluation::Kind::kInfeasible) {
        anchor = -1;
        break;
      }
      --anchor;
    }
    if (anchor >= 0) {
      std::priority_queue<Interval> queue;
      const double edge = opt.left_edge.value_or(grid[0]);
      auto x_left = [&](int first) { return first > 0 ? grid[first - 1] : std::min(edge, grid[0]); };
      auto push = [&](int first, int last, int anc) {
        if (first > last) return;
        queue.push({first, last, anc, grid[anc] * st[anc].upper / x_left(first)});
      };
      push(0, anchor - 1, anchor);
      while (!queue.empty()) {
        const Interval iv = queue.top();
        queue.pop();
        if (iv.bound <= incumbent * opt.prune_slack) break;
        // Geometric midpoint: the bound depends on x_anchor / x_first.
        const double target = std::sqrt(grid[iv.first] * grid[iv.last]);
        int m = static_cast<int>(std::lower_bound(grid.begin() + iv.first, grid.begin() + iv.last + 1, target) -
                                 grid.begin());
        m = std::clamp(m, iv.first, iv.last);
        // An upper value at m below this prunes the whole run left of m.
        const double prune = incumbent * opt.prune_slack * (m > iv.first ? x_left(iv.first) / grid[m] : 1.0);
        const auto k = run(m, prune);
        const int right_anchor = k == Evaluation::Kind::kValue ? m : iv.anchor;
        push(iv.first, m - 1, right_anchor);
        push(m + 1, iv.last, iv.anchor);
      }
    }
  }

  // Best certified value; ties within tolerance go to the smallest x.
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    if (st[i].done && st[i].kind == Evaluation::Kind::kValue) best = std::max(best, st[i].lower);
  }
  if (best < 0.0) return res;
  for (int i = 0; i < n; ++i) {
    if (st[i].done && st[i].kind == Evaluation::Kind::kValue && st[i].lower >= best * (1.0 - opt.rel_tol)) {
      res.feasible = true;
      res.best_index = i;
      res.best_x = grid[i];
      res.best_value = st[i].lower;
      break;
    }
  }
  if (opt.polish_tol > 0.0) polish(grid, eval, opt, res);
  return res;
}

}  // namespace secrate::search
