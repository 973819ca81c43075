#include "secrate/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace secrate {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct ReceiverLines {
  std::optional<std::vector<double>> re, im;
  std::optional<double> radius;
  int line = 0;
};

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& message) const { throw ScenarioError(source_, line_, message); }

  double number(const std::string& token) const {
    double v = 0.0;
    const char* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail("not a finite number: '" + token + "'");
    return v;
  }

  std::vector<double> numbers(const std::string& value) const {
    std::vector<double> out;
    for (const std::string& t : split_list(value)) out.push_back(number(t));
    if (out.empty()) fail("expected at least one number");
    return out;
  }

  double scalar(const std::string& value) const {
    const std::vector<double> v = numbers(value);
    if (v.size() != 1) fail("expected a single number");
    return v[0];
  }

  long long integer(const std::string& value, long long lo) const {
    const double v = scalar(value);
    if (v != std::floor(v) || v < static_cast<double>(lo) || v > 9.0e15) {
      fail("expected an integer >= " + std::to_string(lo));
    }
    return static_cast<long long>(v);
  }

  Scenario parse(std::istream& in) {
    Scenario sc;
    std::optional<int> n_tx;
    std::optional<double> default_radius;
    std::map<int, ReceiverLines> receivers;
    std::set<std::string> seen;
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string text = trim(raw.substr(0, raw.find('#')));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) fail("missing key");
      if (value.empty()) fail("missing value for '" + key + "'");
      if (!seen.insert(key).second) fail("duplicate key '" + key + "'");

      if (key == "n_tx") {
        n_tx = static_cast<int>(integer(value, 1));
      } else if (key == "power_db") {
        sc.power_db = numbers(value);
      } else if (key == "schemes") {
        sc.schemes = split_list(value);
      } else if (key == "grid_points") {
        sc.grid_points = static_cast<int>(integer(value, 2));
      } else if (key == "eps") {
        sc.eps = scalar(value);
        if (!(*sc.eps > 0.0)) fail("eps must be positive");
      } else if (key == "eps_b") {
        sc.eps_b = scalar(value);
        if (*sc.eps_b < 0.0) fail("eps_b must be nonnegative");
      } else if (key == "seed") {
        sc.seed = static_cast<std::uint64_t>(integer(value, 0));
      } else if (key == "radius") {
        default_radius = scalar(value);
        if (*default_radius < 0.0) fail("radius must be nonnegative");
      } else if (key.size() > 1 && key[0] == 'h') {
        receiver_entry(key, value, receivers);
      } else {
        fail("unknown key '" + key + "'");
      }
    }
    line_ = 0;
    if (!n_tx) fail("missing n_tx");
    if (receivers.size() < 2) fail("need at least two receivers (h1, h2, ...)");

    sc.channels.n_tx = *n_tx;
    int expected = 1;
    for (const auto& [index, r] : receivers) {
      line_ = r.line;
      if (index != expected) fail("receivers must be numbered 1.." + std::to_string(receivers.size()) +
                                  " without gaps; missing h" + std::to_string(expected));
      ++expected;
      if (!r.re || !r.im) fail("h" + std::to_string(index) + " needs both .re and .im");
      if (static_cast<int>(r.re->size()) != *n_tx || static_cast<int>(r.im->size()) != *n_tx) {
        fail("h" + std::to_string(index) + " must have n_tx = " + std::to_string(*n_tx) + " entries");
      }
      CRowVector h(*n_tx);
      for (int i = 0; i < *n_tx; ++i) h(i) = Complex((*r.re)[i], (*r.im)[i]);
      sc.channels.channels.push_back(h);
      sc.channels.radii.push_back(r.radius.value_or(default_radius.value_or(0.0)));
      if (sc.channels.radii.back() >= h.norm()) {
        fail("radius of h" + std::to_string(index) + " must be below the channel norm");
      }
    }
    line_ = 0;
    try {
      sc.channels.validate();
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    return sc;
  }

 private:
  void receiver_entry(const std::string& key, const std::string& value, std::map<int, ReceiverLines>& receivers) {
    const auto dot = key.find('.');
    const std::string index_text = key.substr(1, dot == std::string::npos ? std::string::npos : dot - 1);
    const std::string field = dot == std::string::npos ? std::string() : key.substr(dot + 1);
    int index = 0;
    const auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
    if (ec != std::errc() || ptr != index_text.data() + index_text.size() || index < 1) {
      fail("unknown key '" + key + "'");
    }
    ReceiverLines& r = receivers[index];
    if (r.line == 0) r.line = line_;
    if (field == "re") {
      r.re = numbers(value);
    } else if (field == "im") {
      r.im = numbers(value);
    } else if (field == "radius") {
      r.radius = scalar(value);
      if (*r.radius < 0.0) fail("radius must be nonnegative");
    } else {
      fail("unknown key '" + key + "' (expected .re, .im or .radius)");
    }
  }

  std::string source_;
  int line_ = 0;
};

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " + message),
      line_(line) {}

Scenario parse_scenario(std::istream& in, const std::string& source) { return Parser(source).parse(in); }

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, 0, "cannot open file");
  return parse_scenario(in, path);
}

}  // namespace secrate
