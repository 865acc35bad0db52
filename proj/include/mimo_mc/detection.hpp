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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mimo_mc/classifiers.hpp"
#include "mimo_mc/constellation.hpp"
#include "mimo_mc/error.hpp"
#include "mimo_mc/metrics.hpp"

namespace mimo_mc {

/// Unscaled bit LLRs of one layer. Negative favours bit 0; divide by sigma^2
/// for true log-likelihood ratios.
struct LlrVector {
  int layer = 0;
  std::vector<double> llrs;
};

/// Lambda_k = min_{b_k = 0} d - min_{b_k = 1} d over the points of `c`.
inline LlrVector subspace_llrs(std::span<const double> distances, const Constellation& c, int layer = 0) {
  if (static_cast<int>(distances.size()) != c.size()) {
    throw Error(Errc::kDimensionMismatch, "need one distance per constellation point");
  }
  LlrVector out;
  out.layer = layer;
  const int q = c.bits_per_symbol();
  out.llrs.resize(static_cast<std::size_t>(q));
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < q; ++k) {
    double u = kInf;
    double v = kInf;
    for (int p = 0; p < c.size(); ++p) {
      const double d = distances[static_cast<std::size_t>(p)];
      if (c.bit(p, k) == 0) {
        u = std::min(u, d);
      } else {
        v = std::min(v, d);
      }
    }
    if (u == kInf || v == kInf) throw Error(Errc::kEmptyBitClass, "bit " + std::to_string(k) + " has an empty class");
    out.llrs[static_cast<std::size_t>(k)] = u - v;
  }
  return out;
}

inline int argmin_index(std::span<const double> d) {
  return static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
}

enum class CacheMode {
  kFull,       // every candidate distance and slicer output
  kStreaming,  // per-bit minima and the hard decision only
};

/// Distance metrics per (observation, hypothesis) written while classifying
/// and read back for the winning hypothesis. Distances are unscaled.
class DistanceCache {
 public:
  DistanceCache() = default;

  DistanceCache(int observations, std::span<const ModulationType> hypotheses, int interferers,
                CacheMode mode = CacheMode::kFull)
      : mode_(mode), t_(observations), interferers_(interferers), hypotheses_(hypotheses.begin(), hypotheses.end()) {
    const std::size_t slots = static_cast<std::size_t>(t_) * hypotheses_.size();
    distances_.resize(slots);
    x1_.resize(slots);
    streamed_.resize(slots);
    written_.assign(slots, 0);
    read_.assign(slots, 0);
  }

  CacheMode mode() const noexcept { return mode_; }
  int observations() const noexcept { return t_; }
  int hypotheses() const noexcept { return static_cast<int>(hypotheses_.size()); }

  void store(int t, int j, std::span<const double> distances, std::span<const std::complex<double>> x1) {
    const std::size_t s = slot(t, j);
    const Constellation& c = constellation(hypotheses_[static_cast<std::size_t>(j)]);
    if (mode_ == CacheMode::kFull) {
      distances_[s].assign(distances.begin(), distances.end());
      x1_[s].assign(x1.begin(), x1.end());
    } else {
      Streamed& st = streamed_[s];
      st.hard_index = argmin_index(distances);
      st.llr = c.bits_per_symbol() > 0 ? subspace_llrs(distances, c).llrs : std::vector<double>{};
    }
    written_[s] = 1;
  }

  bool written(int t, int j) const { return written_[slot(t, j)] != 0; }
  bool was_read(int t, int j) const { return read_[slot(t, j)] != 0; }

  std::span<const double> distances(int t, int j) const {
    require_full();
    return distances_[touch(t, j)];
  }

  std::span<const std::complex<double>> slicer_outputs(int t, int j) const {
    require_full();
    return x1_[touch(t, j)];
  }

  LlrVector llrs(int t, int j, int layer) const {
    const std::size_t s = touch(t, j);
    if (mode_ == CacheMode::kStreaming) return {layer, streamed_[s].llr};
    const Constellation& c = constellation(hypotheses_[static_cast<std::size_t>(j)]);
    if (c.bits_per_symbol() == 0) return {layer, {}};
    return subspace_llrs(distances_[s], c, layer);
  }

  int hard_index(int t, int j) const {
    const std::size_t s = touch(t, j);
    return mode_ == CacheMode::kStreaming ? streamed_[s].hard_index : argmin_index(distances_[s]);
  }

  /// Number of scalar distances held (full mode).
  std::size_t stored_distances() const {
    std::size_t total = 0;
    for (const auto& d : distances_) total += d.size();
    return total;
  }

  /// True when every slot read since construction had been written.
  bool coherent() const {
    for (std::size_t s = 0; s < read_.size(); ++s) {
      if (read_[s] && !written_[s]) return false;
    }
    return true;
  }

 private:
  struct Streamed {
    int hard_index = 0;
    std::vector<double> llr;
  };

  std::size_t slot(int t, int j) const {
    if (t < 0 || t >= t_ || j < 0 || j >= hypotheses()) {
      throw Error(Errc::kIndexOutOfRange, "cache slot out of range");
    }
    return static_cast<std::size_t>(t) * hypotheses_.size() + static_cast<std::size_t>(j);
  }

  std::size_t touch(int t, int j) const {
    const std::size_t s = slot(t, j);
    if (!written_[s]) {
      throw Error(Errc::kCacheMiss, "no metrics cached for observation " + std::to_string(t) + ", hypothesis " +
                                        std::to_string(j));
    }
    read_[s] = 1;
    return s;
  }

  void require_full() const {
    if (mode_ != CacheMode::kFull) throw Error(Errc::kCacheMiss, "streaming cache keeps no per-candidate metrics");
  }

  CacheMode mode_ = CacheMode::kFull;
  int t_ = 0;
  int interferers_ = 0;
  std::vector<ModulationType> hypotheses_;
  std::vector<std::vector<double>> distances_;
  std::vector<std::vector<std::complex<double>>> x1_;
  std::vector<Streamed> streamed_;
  std::vector<char> written_;
  mutable std::vector<char> read_;
};

struct JointDetection {
  int winner_index = 0;
  ModulationType winner = ModulationType::kPhi;
  HypothesisScore score;
  std::vector<LlrVector> llrs;      // one per observation
  std::vector<int> hard_index;      // per observation, into the winner's constellation
  std::vector<std::complex<double>> hard_symbol;
  DistanceCache cache;
};

/// Per-layer joint classification and detection: distances for every
/// hypothesis are computed once per observation, cached, folded into the
/// likelihoods, and the winner's cached metrics become LLRs and hard
/// decisions. `kind` selects the subspace or LORD expansion and the
/// Log-MAP or Max-Log-MAP likelihood.
inline JointDetection joint_classify_detect(const ObservationStream& stream, int layer,
                                            std::span<const ModulationType> hypotheses, ModulationType slice_const,
                                            ClassifierKind kind, CacheMode mode = CacheMode::kFull,
                                            OpCounters* ops = nullptr) {
  const auto expansion = expansion_of(kind);
  if (!expansion) throw Error(Errc::kConfig, "joint detection needs a subspace or LORD classifier");
  const bool log_map = uses_log_sum(kind);
  const int n = stream.size();
  const int t_count = static_cast<int>(stream.observations.size());

  // Layer of interest swapped last, then decomposed.
  LayerMetric metric(decomposition_for(*stream.h, layer, *expansion), *expansion,
                     uniform_slicers(n, slice_const));

  JointDetection out;
  out.score = HypothesisScore(layer, hypotheses.size());
  out.cache = DistanceCache(t_count, hypotheses, n - 1, mode);
  std::size_t widest = 1;
  for (auto mt : hypotheses) widest = std::max(widest, static_cast<std::size_t>(cardinality(mt)));
  std::vector<double> d(widest);
  std::vector<std::complex<double>> x1(widest * static_cast<std::size_t>(std::max(n - 1, 0)));

  // Metrics for all hypotheses, accumulated over T observations.
  for (int t = 0; t < t_count; ++t) {
    metric.load(stream.observations[static_cast<std::size_t>(t)].y);
    for (std::size_t j = 0; j < hypotheses.size(); ++j) {
      const Constellation& c = constellation(hypotheses[j]);
      const auto size = static_cast<std::size_t>(c.size());
      std::span<double> dj(d.data(), size);
      metric.distances(c, dj, ops, x1.data());
      out.cache.store(t, static_cast<int>(j), dj,
                      std::span<const std::complex<double>>(x1.data(), size * static_cast<std::size_t>(n - 1)));
      const DistanceResult r = summarize_distances(dj, stream.sigma2, log_map, ops);
      out.score.scores[j] += prior_penalty(hypotheses[j]) + (log_map ? r.logsum : -r.d_min);
    }
    ++out.score.t_seen;
  }
  out.winner_index = out.score.winner();
  out.winner = hypotheses[static_cast<std::size_t>(out.winner_index)];

  // Soft output from the winner's cached metrics, no recomputation.
  const Constellation& wc = constellation(out.winner);
  for (int t = 0; t < t_count; ++t) {
    out.llrs.push_back(out.cache.llrs(t, out.winner_index, layer));
    const int idx = out.cache.hard_index(t, out.winner_index);
    out.hard_index.push_back(idx);
    out.hard_symbol.push_back(wc.point(idx));
  }
  return out;
}

struct LayerDetection {
  LlrVector llr;
  int hard_index = 0;
  std::complex<double> hard_symbol;
};

/// Detector for one layer with a known candidate MT; interfering layers are
/// sliced per `slicers` (dense assumption or the true MTs).
class LayerDetector {
 public:
  LayerDetector(const ComplexMatrix& h, int layer, ModulationType layer_mt, SlicerSet slicers, Expansion expansion)
      : layer_(layer),
        candidates_(&constellation(layer_mt)),
        metric_(decomposition_for(h, layer, expansion), expansion, std::move(slicers)),
        d_(static_cast<std::size_t>(candidates_->size())) {}

  const LayerMetric& metric() const noexcept { return metric_; }

  /// Unscaled distances of every candidate for `y`.
  std::span<const double> distances(const ComplexVector& y) {
    metric_.load(y);
    metric_.distances(*candidates_, d_);
    return d_;
  }

  LayerDetection detect(const ComplexVector& y) {
    const auto d = distances(y);
    LayerDetection out;
    out.hard_index = argmin_index(d);
    out.hard_symbol = candidates_->point(out.hard_index);
    out.llr = candidates_->bits_per_symbol() > 0 ? subspace_llrs(d, *candidates_, layer_) : LlrVector{layer_, {}};
    return out;
  }

 private:
  int layer_;
  const Constellation* candidates_;
  LayerMetric metric_;
  std::vector<double> d_;
};

/// Detection of `layer` with the true MTs of every layer known.
inline LayerDetection mt_aware_detect(const ComplexMatrix& h, const ComplexVector& y, int layer,
                                      std::span<const ModulationType> true_mts, Expansion expansion) {
  LayerDetector det(h, layer, true_mts[static_cast<std::size_t>(layer)], aware_slicers(layer, true_mts), expansion);
  return det.detect(y);
}

}  // namespace mimo_mc
