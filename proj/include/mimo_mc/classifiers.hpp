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
#include <span>
#include <string_view>
#include <vector>

#include "mimo_mc/channel.hpp"
#include "mimo_mc/constellation.hpp"
#include "mimo_mc/decomposition.hpp"
#include "mimo_mc/metrics.hpp"

namespace mimo_mc {

enum class ClassifierKind {
  kLogMap,
  kMaxLogMap,
  kZfAlrt,
  kSubspaceLogMap,
  kSubspaceMaxLogMap,
  kLordLogMap,
  kLordMaxLogMap,
};

inline constexpr std::array<ClassifierKind, 7> kAllClassifiers = {
    ClassifierKind::kLogMap,         ClassifierKind::kMaxLogMap,         ClassifierKind::kZfAlrt,
    ClassifierKind::kSubspaceLogMap, ClassifierKind::kSubspaceMaxLogMap, ClassifierKind::kLordLogMap,
    ClassifierKind::kLordMaxLogMap};

inline std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogMap: return "log-map";
    case ClassifierKind::kMaxLogMap: return "max-log-map";
    case ClassifierKind::kZfAlrt: return "zf-alrt";
    case ClassifierKind::kSubspaceLogMap: return "subspace-log-map";
    case ClassifierKind::kSubspaceMaxLogMap: return "subspace-max-log-map";
    case ClassifierKind::kLordLogMap: return "lord-log-map";
    case ClassifierKind::kLordMaxLogMap: return "lord-max-log-map";
  }
  return "?";
}

inline std::optional<ClassifierKind> parse_classifier(std::string_view name) {
  for (auto kind : kAllClassifiers) {
    if (classifier_name(kind) == name) return kind;
  }
  return std::nullopt;
}

constexpr bool is_joint(ClassifierKind kind) {
  return kind == ClassifierKind::kLogMap || kind == ClassifierKind::kMaxLogMap;
}

constexpr bool uses_log_sum(ClassifierKind kind) {
  return kind == ClassifierKind::kLogMap || kind == ClassifierKind::kZfAlrt ||
         kind == ClassifierKind::kSubspaceLogMap || kind == ClassifierKind::kLordLogMap;
}

constexpr std::optional<Expansion> expansion_of(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kSubspaceLogMap:
    case ClassifierKind::kSubspaceMaxLogMap: return Expansion::kSubspace;
    case ClassifierKind::kLordLogMap:
    case ClassifierKind::kLordMaxLogMap: return Expansion::kLord;
    default: return std::nullopt;
  }
}

/// log(1/|X|): the uniform-prior penalty of a hypothesis.
inline double prior_penalty(ModulationType mt) {
  return -static_cast<double>(bits_per_symbol(mt)) * std::log(2.0);
}

/// Per-layer accumulated likelihoods, one per hypothesis.
struct HypothesisScore {
  int layer = 0;
  std::vector<double> scores;
  std::int64_t t_seen = 0;

  HypothesisScore() = default;
  HypothesisScore(int layer_index, std::size_t hypotheses) : layer(layer_index), scores(hypotheses, 0.0) {}

  /// Index of the largest score; ties go to the lowest index.
  int winner() const {
    int best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j) {
      if (scores[j] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
    }
    return best;
  }
};

/// Channel, noise variance and the observations of one frame.
struct ObservationStream {
  const ComplexMatrix* h = nullptr;
  double sigma2 = 0.0;
  std::span<const Observation> observations;

  ObservationStream(const ComplexMatrix& channel, double noise, std::span<const Observation> obs)
      : h(&channel), sigma2(noise), observations(obs) {}
  ObservationStream(const Frame& frame)  // NOLINT(google-explicit-constructor)
      : h(&frame.channel.h), sigma2(frame.sigma2), observations(frame.observations) {}

  int size() const noexcept { return static_cast<int>(h->cols()); }
};

/// Minimum scaled distance and log-sum of one hypothesis for one observation.
struct DistanceResult {
  double d_min = 0.0;
  double logsum = 0.0;
  std::vector<double> per_symbol;
};

inline DistanceResult summarize_distances(std::span<const double> unscaled, double sigma2, bool with_log_sum,
                                          OpCounters* ops = nullptr, bool keep_per_symbol = false) {
  const double inv = 1.0 / sigma2;
  DistanceResult out;
  double d_min = std::numeric_limits<double>::infinity();
  for (double d : unscaled) d_min = std::min(d_min, d);
  out.d_min = d_min * inv;
  out.logsum = with_log_sum ? log_sum_exp_neg(unscaled, inv, ops) : -out.d_min;
  if (keep_per_symbol) {
    out.per_symbol.reserve(unscaled.size());
    for (double d : unscaled) out.per_symbol.push_back(d * inv);
  }
  return out;
}

/// Folds observations into subspace or LORD per-layer scores. One instance
/// serves a (frame, layer) pair; the decomposition is computed once.
class LayerClassifier {
 public:
  LayerClassifier(const ComplexMatrix& h, int layer, std::span<const ModulationType> hypotheses,
                  ModulationType slice_const, Expansion expansion)
      : LayerClassifier(h, layer, hypotheses, uniform_slicers(static_cast<int>(h.cols()), slice_const),
                        expansion) {}

  LayerClassifier(const ComplexMatrix& h, int layer, std::span<const ModulationType> hypotheses,
                  SlicerSet slicers, Expansion expansion)
      : layer_(layer),
        hypotheses_(hypotheses.begin(), hypotheses.end()),
        metric_(decomposition_for(h, layer, expansion), expansion, std::move(slicers)) {
    std::size_t widest = 1;
    for (auto mt : hypotheses_) widest = std::max(widest, static_cast<std::size_t>(cardinality(mt)));
    scratch_.resize(widest);
  }

  int layer() const noexcept { return layer_; }
  const LayerMetric& metric() const noexcept { return metric_; }
  std::span<const ModulationType> hypotheses() const noexcept { return hypotheses_; }

  /// Adds one observation to either or both score kinds. `log_map` and
  /// `max_log` carry their own operation tallies: the distances are shared
  /// between them, but each is charged what it would cost on its own.
  void fold(const ComplexVector& y, double sigma2, HypothesisScore* log_map, OpCounters* log_ops,
            HypothesisScore* max_log, OpCounters* max_ops) {
    metric_.load(y);
    for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
      const Constellation& c = constellation(hypotheses_[j]);
      std::span<double> d(scratch_.data(), static_cast<std::size_t>(c.size()));
      metric_.distances(c, d, log_ops);
      if (max_ops) max_ops->distances += static_cast<std::uint64_t>(c.size());
      const DistanceResult r = summarize_distances(d, sigma2, log_map != nullptr, log_ops);
      const double prior = prior_penalty(hypotheses_[j]);
      if (log_map) log_map->scores[j] += prior + r.logsum;
      if (max_log) max_log->scores[j] += prior - r.d_min;
    }
    if (log_map) ++log_map->t_seen;
    if (max_log) ++max_log->t_seen;
  }

 private:
  int layer_;
  std::vector<ModulationType> hypotheses_;
  LayerMetric metric_;
  std::vector<double> scratch_;
};

inline HypothesisScore classify_layer_expansion(const ObservationStream& stream, int layer,
                                                std::span<const ModulationType> hypotheses,
                                                ModulationType slice_const, Expansion expansion, bool log_map,
                                                OpCounters* ops = nullptr) {
  LayerClassifier clf(*stream.h, layer, hypotheses, slice_const, expansion);
  HypothesisScore score(layer, hypotheses.size());
  for (const auto& obs : stream.observations) {
    if (log_map) {
      clf.fold(obs.y, stream.sigma2, &score, ops, nullptr, nullptr);
    } else {
      clf.fold(obs.y, stream.sigma2, nullptr, nullptr, &score, ops);
    }
  }
  return score;
}

inline HypothesisScore classify_subspace_log_map(const ObservationStream& stream, int layer,
                                                 std::span<const ModulationType> hypotheses,
                                                 ModulationType slice_const, OpCounters* ops = nullptr) {
  return classify_layer_expansion(stream, layer, hypotheses, slice_const, Expansion::kSubspace, true, ops);
}

inline HypothesisScore classify_subspace_max_log_map(const ObservationStream& stream, int layer,
                                                     std::span<const ModulationType> hypotheses,
                                                     ModulationType slice_const, OpCounters* ops = nullptr) {
  return classify_layer_expansion(stream, layer, hypotheses, slice_const, Expansion::kSubspace, false, ops);
}

inline HypothesisScore classify_lord_log_map(const ObservationStream& stream, int layer,
                                             std::span<const ModulationType> hypotheses,
                                             ModulationType slice_const, OpCounters* ops = nullptr) {
  return classify_layer_expansion(stream, layer, hypotheses, slice_const, Expansion::kLord, true, ops);
}

inline HypothesisScore classify_lord_max_log_map(const ObservationStream& stream, int layer,
                                                 std::span<const ModulationType> hypotheses,
                                                 ModulationType slice_const, OpCounters* ops = nullptr) {
  return classify_layer_expansion(stream, layer, hypotheses, slice_const, Expansion::kLord, false, ops);
}

// ---------------------------------------------------------------------------
// Zero-forcing sub-optimal ALRT

/// Noise variance assigned to the ZF output of layer n. kColumnNorm is
/// sigma^2 / ||h_n||^2; kPostEqualization is sigma^2 [(H^H H)^{-1}]_nn.
enum class ZfNoiseModel { kColumnNorm, kPostEqualization };

class ZfLayerClassifier {
 public:
  ZfLayerClassifier(const ComplexMatrix& h, int layer, std::span<const ModulationType> hypotheses,
                    ZfNoiseModel model = ZfNoiseModel::kColumnNorm)
      : layer_(layer), hypotheses_(hypotheses.begin(), hypotheses.end()) {
    if (layer < 0 || layer >= h.cols()) throw Error(Errc::kIndexOutOfRange, "layer out of range");
    const auto [q, r] = qrd(h);
    // Row `layer` of H^{-1} = R^{-1} Q^H.
    const ComplexMatrix r_inv =
        r.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(h.cols(), h.cols()));
    equalizer_row_ = r_inv.row(layer) * q.adjoint();
    gain_ = model == ZfNoiseModel::kColumnNorm ? 1.0 / h.col(layer).squaredNorm()
                                               : equalizer_row_.squaredNorm();
    std::size_t widest = 1;
    for (auto mt : hypotheses_) widest = std::max(widest, static_cast<std::size_t>(cardinality(mt)));
    scratch_.resize(widest);
  }

  /// sigma_ZF^2 / sigma^2.
  double noise_gain() const noexcept { return gain_; }

  std::complex<double> equalize(const ComplexVector& y) const { return (equalizer_row_ * y)(0); }

  void fold(const ComplexVector& y, double sigma2, HypothesisScore& score, OpCounters* ops = nullptr) {
    const std::complex<double> yz = equalize(y);
    const double sigma2_zf = gain_ * sigma2;
    for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
      const Constellation& c = constellation(hypotheses_[j]);
      std::span<double> d(scratch_.data(), static_cast<std::size_t>(c.size()));
      for (int k = 0; k < c.size(); ++k) d[static_cast<std::size_t>(k)] = std::norm(yz - c.point(k));
      if (ops) ops->distances += static_cast<std::uint64_t>(c.size());
      score.scores[j] += prior_penalty(hypotheses_[j]) + log_sum_exp_neg(d, 1.0 / sigma2_zf, ops);
    }
    ++score.t_seen;
  }

 private:
  int layer_;
  std::vector<ModulationType> hypotheses_;
  Eigen::RowVectorXcd equalizer_row_;
  double gain_ = 1.0;
  std::vector<double> scratch_;
};

inline HypothesisScore classify_zf_alrt(const ObservationStream& stream, int layer,
                                        std::span<const ModulationType> hypotheses,
                                        ZfNoiseModel model = ZfNoiseModel::kColumnNorm, OpCounters* ops = nullptr) {
  ZfLayerClassifier clf(*stream.h, layer, hypotheses, model);
  HypothesisScore score(layer, hypotheses.size());
  for (const auto& obs : stream.observations) clf.fold(obs.y, stream.sigma2, score, ops);
  return score;
}

// ---------------------------------------------------------------------------
// Joint Log-MAP / Max-Log-MAP over all S^N hypotheses (reference classifiers)

inline constexpr std::uint64_t kJointLatticeLimit = 1ULL << 20;

struct JointDecision {
  std::vector<double> scores;  // one per joint hypothesis, layer 0 most significant
  int winner = 0;
  std::vector<int> hypothesis_index;  // per layer
  std::vector<ModulationType> mts;    // per layer
};

/// Hypothesis index per layer for joint index `j` (base S, layer 0 first).
inline std::vector<int> joint_digits(std::uint64_t j, int n, int s) {
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (int l = n - 1; l >= 0; --l) {
    digits[static_cast<std::size_t>(l)] = static_cast<int>(j % static_cast<std::uint64_t>(s));
    j /= static_cast<std::uint64_t>(s);
  }
  return digits;
}

inline JointDecision classify_joint(const ObservationStream& stream, std::span<const ModulationType> hypotheses,
                                    bool log_map, OpCounters* ops = nullptr) {
  const int n = stream.size();
  const int s = static_cast<int>(hypotheses.size());
  std::uint64_t widest = 1;
  for (auto mt : hypotheses) widest = std::max<std::uint64_t>(widest, static_cast<std::uint64_t>(cardinality(mt)));
  std::uint64_t lattice = 1;
  std::uint64_t joint = 1;
  for (int l = 0; l < n; ++l) {
    lattice *= widest;
    joint *= static_cast<std::uint64_t>(s);
    if (lattice > kJointLatticeLimit || joint > kJointLatticeLimit) {
      throw Error(Errc::kTooLarge, "joint enumeration exceeds 2^20 lattice points per hypothesis");
    }
  }
  const ComplexMatrix& h = *stream.h;

  // Column contributions h_l * x for every point of every hypothesis.
  std::vector<std::vector<ComplexVector>> contrib(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j) {
    const Constellation& c = constellation(hypotheses[static_cast<std::size_t>(j)]);
    for (int l = 0; l < n; ++l) {
      for (int k = 0; k < c.size(); ++k) contrib[static_cast<std::size_t>(j)].push_back(h.col(l) * c.point(k));
    }
  }

  JointDecision out;
  out.scores.assign(static_cast<std::size_t>(joint), 0.0);
  std::vector<double> dist;
  std::vector<ComplexVector> partial(static_cast<std::size_t>(n + 1), ComplexVector::Zero(n));
  std::vector<int> idx(static_cast<std::size_t>(n));

  for (const auto& obs : stream.observations) {
    for (std::uint64_t jj = 0; jj < joint; ++jj) {
      const std::vector<int> digits = joint_digits(jj, n, s);
      std::vector<const Constellation*> cs(static_cast<std::size_t>(n));
      double prior = 0.0;
      for (int l = 0; l < n; ++l) {
        const ModulationType mt = hypotheses[static_cast<std::size_t>(digits[static_cast<std::size_t>(l)])];
        cs[static_cast<std::size_t>(l)] = &constellation(mt);
        prior += prior_penalty(mt);
      }
      // Odometer over the lattice with partial sums y - sum_{l < depth} h_l x_l.
      dist.clear();
      std::fill(idx.begin(), idx.end(), 0);
      partial[0] = obs.y;
      int depth = 0;
      while (true) {
        for (; depth < n; ++depth) {
          const auto d = static_cast<std::size_t>(depth);
          const auto& col = contrib[static_cast<std::size_t>(digits[d])];
          partial[d + 1] = partial[d] - col[static_cast<std::size_t>(depth * cs[d]->size() + idx[d])];
        }
        dist.push_back(partial[static_cast<std::size_t>(n)].squaredNorm());
        int l = n - 1;
        while (l >= 0 && ++idx[static_cast<std::size_t>(l)] == cs[static_cast<std::size_t>(l)]->size()) {
          idx[static_cast<std::size_t>(l)] = 0;
          --l;
        }
        if (l < 0) break;
        depth = l;
      }
      if (ops) ops->distances += dist.size();
      const DistanceResult r = summarize_distances(dist, stream.sigma2, log_map, ops);
      out.scores[static_cast<std::size_t>(jj)] += prior + (log_map ? r.logsum : -r.d_min);
    }
  }

  int best = 0;
  for (std::size_t j = 1; j < out.scores.size(); ++j) {
    if (out.scores[j] > out.scores[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  }
  out.winner = best;
  out.hypothesis_index = joint_digits(static_cast<std::uint64_t>(best), n, s);
  for (int d : out.hypothesis_index) out.mts.push_back(hypotheses[static_cast<std::size_t>(d)]);
  return out;
}

inline JointDecision classify_log_map(const ObservationStream& stream, std::span<const ModulationType> hypotheses,
                                      OpCounters* ops = nullptr) {
  return classify_joint(stream, hypotheses, true, ops);
}

inline JointDecision classify_max_log_map(const ObservationStream& stream,
                                          std::span<const ModulationType> hypotheses, OpCounters* ops = nullptr) {
  return classify_joint(stream, hypotheses, false, ops);
}

/// Upper bounds on per-observation operation counts, all N layers included.
/// Per-layer classifiers spend one log per hypothesis and layer, so their log
/// bound is N*S.
inline OpCounters complexity_bound(ClassifierKind kind, int n, int s, int widest) {
  const auto pow_u = [](std::uint64_t base, int e) {
    std::uint64_t v = 1;
    for (int i = 0; i < e; ++i) v *= base;
    return v;
  };
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t us = static_cast<std::uint64_t>(s);
  const std::uint64_t ux = static_cast<std::uint64_t>(widest);
  switch (kind) {
    case ClassifierKind::kLogMap: return {pow_u(us * ux, n), pow_u(us * ux, n), pow_u(us, n)};
    case ClassifierKind::kMaxLogMap: return {pow_u(us * ux, n), 0, 0};
    case ClassifierKind::kZfAlrt:
    case ClassifierKind::kSubspaceLogMap:
    case ClassifierKind::kLordLogMap: return {un * us * ux, un * us * ux, un * us};
    case ClassifierKind::kSubspaceMaxLogMap:
    case ClassifierKind::kLordMaxLogMap: return {un * us * ux, 0, 0};
  }
  return {};
}

}  // namespace mimo_mc
