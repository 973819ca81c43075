#pragma once

#include <random>
#include <vector>

#include "secrate/model.hpp"

namespace secrate::testing {

// Reference channels: two antennas, five receivers, receiver 1 first.
inline ChannelSet reference_channels(double radius = 0.0) {
  ChannelSet ch;
  ch.n_tx = 2;
  auto row = [](double a, double b, double c, double d) {
    CRowVector h(2);
    h << Complex(a, b), Complex(c, d);
    return h;
  };
  ch.channels = {row(0.3802, -1.5972, 1.2968, 0.6096), row(0.2254, -0.3066, -0.9247, 0.2423),
                 row(0.5303, -0.9545, 1.9583, 2.1460), row(0.5129, 0.5054, -0.0446, -0.1449),
                 row(0.0878, -0.9963, 1.0534, 1.0021)};
  ch.radii.assign(5, radius);
  return ch;
}

inline CRowVector random_channel(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CRowVector h(n);
  for (int i = 0; i < n; ++i) h(i) = Complex(g(rng), g(rng));
  return h;
}

inline HermitianMatrix random_psd(int n, std::mt19937_64& rng, double trace) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  CMatrix m = a * a.adjoint();
  m *= trace / m.trace().real();
  return HermitianMatrix::symmetrized(m);
}

inline CovarianceTriple random_triple(int n, std::mt19937_64& rng, double power) {
  return {random_psd(n, rng, power / 3), random_psd(n, rng, power / 3), random_psd(n, rng, power / 3)};
}

}  // namespace secrate::testing
