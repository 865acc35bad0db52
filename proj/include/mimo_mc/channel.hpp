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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mimo_mc/constellation.hpp"
#include "mimo_mc/decomposition.hpp"
#include "mimo_mc/error.hpp"

namespace mimo_mc {

/// SplitMix64: output k is a bijective mix of (key + k * golden gamma), so a
/// stream is fully determined by its key. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key = 0) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent substream for (seed, index, lane); lanes separate uses of the same index.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  std::uint64_t key = SplitMix64::mix(seed ^ 0x6A09E667F3BCC909ULL);
  key = SplitMix64::mix(key ^ (index + 0x3C6EF372FE94F82BULL));
  key = SplitMix64::mix(key ^ (lane * 0xA54FF53A5F1D36F1ULL + 0x510E527FADE682D1ULL));
  return SplitMix64(key);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Noise variance for SNR = N / sigma^2.
inline double snr_to_sigma2(double snr_linear, int n) {
  if (!(snr_linear > 0.0)) throw Error(Errc::kNonPositiveSnr, "SNR must be positive");
  return static_cast<double>(n) / snr_linear;
}

/// CN(0, variance) sample.
template <class Rng>
std::complex<double> complex_gaussian(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

/// Principal square root of the exponential correlation matrix rho^|i-j|.
inline Eigen::MatrixXd exponential_correlation_sqrt(int n, double rho) {
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) corr(i, j) = std::pow(rho, std::abs(i - j));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  return eig.operatorSqrt();
}

struct ChannelRealization {
  ComplexMatrix h;
  double correlation_factor = 0.0;
};

/// i.i.d. CN(0,1) channel, optionally shaped as R_r^{1/2} H R_t^{1/2} with
/// both sides using the same exponential profile.
template <class Rng>
ChannelRealization generate_channel(int n, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw Error(Errc::kConfig, "correlation factor must lie in [0, 1)");
  }
  ComplexMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) h(i, j) = complex_gaussian(rng);
  }
  if (rho > 0.0) {
    const ComplexMatrix root = exponential_correlation_sqrt(n, rho).cast<std::complex<double>>();
    h = root * h * root;
  }
  return {std::move(h), rho};
}

struct FrameSpec {
  int n = 4;
  int observations = 1000;  // T
  std::vector<ModulationType> hypotheses;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  double rho = 0.0;
  // Pins one layer's MT instead of drawing it (the SER setup).
  std::optional<std::pair<int, ModulationType>> fixed_layer;
};

struct Observation {
  ComplexVector y;
  ComplexVector x;
  std::vector<int> symbol_index;  // per layer, into that layer's constellation
};

struct Frame {
  ChannelRealization channel;
  std::vector<ModulationType> mts;  // ground truth per layer
  std::vector<int> hypothesis_index;  // index into FrameSpec::hypotheses, -1 if pinned
  double sigma2 = 0.0;
  std::vector<Observation> observations;

  int size() const noexcept { return static_cast<int>(mts.size()); }
};

inline void validate(const FrameSpec& spec) {
  if (spec.n < 1) throw Error(Errc::kConfig, "N must be at least 1");
  if (spec.observations < 1) throw Error(Errc::kConfig, "T must be at least 1");
  if (spec.hypotheses.empty()) throw Error(Errc::kConfig, "hypothesis set is empty");
  if (spec.fixed_layer && (spec.fixed_layer->first < 0 || spec.fixed_layer->first >= spec.n)) {
    throw Error(Errc::kConfig, "fixed layer index out of range");
  }
}

/// One quasi-static frame: a channel and per-layer MTs fixed for T
/// observations, fresh symbols and noise per observation. Noise is drawn at
/// unit variance and scaled, so the same rng state gives the same frame
/// shape at every SNR.
template <class Rng>
Frame draw_frame(const FrameSpec& spec, Rng& rng) {
  validate(spec);
  const int n = spec.n;
  Frame frame;
  frame.channel = generate_channel(n, spec.rho, rng);
  frame.sigma2 = snr_to_sigma2(db_to_linear(spec.snr_db), n);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(spec.hypotheses.size()) - 1);
  frame.mts.resize(static_cast<std::size_t>(n));
  frame.hypothesis_index.resize(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    const int j = pick(rng);
    frame.hypothesis_index[static_cast<std::size_t>(l)] = j;
    frame.mts[static_cast<std::size_t>(l)] = spec.hypotheses[static_cast<std::size_t>(j)];
  }
  if (spec.fixed_layer) {
    const auto [layer, mt] = *spec.fixed_layer;
    frame.mts[static_cast<std::size_t>(layer)] = mt;
    frame.hypothesis_index[static_cast<std::size_t>(layer)] = -1;
  }

  const double sigma = std::sqrt(frame.sigma2);
  frame.observations.resize(static_cast<std::size_t>(spec.observations));
  for (auto& obs : frame.observations) {
    obs.x.resize(n);
    obs.symbol_index.resize(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
      const Constellation& c = constellation(frame.mts[static_cast<std::size_t>(l)]);
      std::uniform_int_distribution<int> sym(0, c.size() - 1);
      const int idx = sym(rng);
      obs.symbol_index[static_cast<std::size_t>(l)] = idx;
      obs.x(l) = c.point(idx);
    }
    obs.y = frame.channel.h * obs.x;
    for (int i = 0; i < n; ++i) obs.y(i) += sigma * complex_gaussian(rng);
  }
  return frame;
}

/// Frame `index` of an experiment: drawn from its own substream of `spec.seed`.
inline Frame draw_frame(const FrameSpec& spec, std::uint64_t index) {
  SplitMix64 rng = substream(spec.seed, index);
  return draw_frame(spec, rng);
}

}  // namespace mimo_mc
