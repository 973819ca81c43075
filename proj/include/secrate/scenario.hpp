#pragma once

// Scenario files: line-oriented `key = value` text. '#' starts a comment.
//
//   n_tx = 2                      transmit antennas (required)
//   h1.re = 0.3802, 1.2968        real parts of receiver 1's channel
//   h1.im = -1.5972, 0.6096       imaginary parts (both required per receiver)
//   h1.radius = 0.2               error-ball radius of one receiver
//   radius = 0.2                  radius of every receiver without its own
//   power_db = 5, 10, 15, 20      transmit powers in dB
//   schemes = optimal, no-an      scheme names, comma separated
//   grid_points = 25
//   eps = 0.05                    outer search suboptimality in bits
//   eps_b = 0                     bisection tolerance, 0 for the default
//   seed = 1                      ball-sampling seed
//
// Receivers are numbered from 1 without gaps; receiver 1 is the legitimate
// receiver of the confidential message. Values may be separated by commas or
// whitespace.

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "secrate/model.hpp"

namespace secrate {

/// Parse failure anchored at a line ("name:line: message"); line 0 refers to
/// the file as a whole.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct Scenario {
  ChannelSet channels;
  std::vector<double> power_db;
  std::vector<std::string> schemes;
  std::optional<int> grid_points;
  std::optional<double> eps;
  std::optional<double> eps_b;
  std::optional<std::uint64_t> seed;
};

Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>");
Scenario load_scenario(const std::string& path);

}  // namespace secrate
