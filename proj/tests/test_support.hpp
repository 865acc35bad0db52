/*
 * Copyright 2026 The mimo-mc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.

*/

// Shared helpers for the unit tests: seeded channels and brute-force oracles
// that do not go through the library's factored paths.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mimo_mc/mimo_mc.hpp"

namespace mimo_mc::testing {

inline ComplexMatrix random_channel(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) h(i, j) = {normal(rng), normal(rng)};
  }
  return h;
}

inline ComplexVector random_vector(int n, std::mt19937_64& rng, double variance = 1.0) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v(i) = {normal(rng), normal(rng)};
  return v;
}

inline int exhaustive_nearest(const Constellation& c, std::complex<double> v) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.size(); ++i) {
    const double d = std::norm(v - c.point(i));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// min over the full lattice X^N of ||y - Hx||^2 (unscaled), per-layer sets.
inline double exhaustive_ml(const ComplexMatrix& h, const ComplexVector& y,
                            const std::vector<const Constellation*>& sets) {
  const int n = static_cast<int>(h.cols());
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    ComplexVector x(n);
    for (int l = 0; l < n; ++l) x(l) = sets[static_cast<std::size_t>(l)]->point(idx[static_cast<std::size_t>(l)]);
    best = std::min(best, (y - h * x).squaredNorm());
    int l = n - 1;
    while (l >= 0 && ++idx[static_cast<std::size_t>(l)] == sets[static_cast<std::size_t>(l)]->size()) {
      idx[static_cast<std::size_t>(l)] = 0;
      --l;
    }
    if (l < 0) break;
  }
  return best;
}

}  // namespace mimo_mc::testing
