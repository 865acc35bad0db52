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
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mimo_mc/constellation.hpp"
#include "mimo_mc/decomposition.hpp"
#include "mimo_mc/error.hpp"

namespace mimo_mc {

/// Euclidean-distance, exp and log evaluations, as tallied against the
/// complexity table of the classifiers.
struct OpCounters {
  std::uint64_t distances = 0;
  std::uint64_t exps = 0;
  std::uint64_t logs = 0;

  OpCounters& operator+=(const OpCounters& o) noexcept {
    distances += o.distances;
    exps += o.exps;
    logs += o.logs;
    return *this;
  }
  friend OpCounters operator-(OpCounters a, const OpCounters& b) noexcept {
    a.distances -= b.distances;
    a.exps -= b.exps;
    a.logs -= b.logs;
    return a;
  }
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

/// How x1 is resolved for a candidate x2: parallel slicing against a diagonal
/// A (punctured R) or successive interference cancellation down a full
/// triangular R.
enum class Expansion { kSubspace, kLord };

/// log sum_k exp(-d_k * inv_sigma2), shifted by the minimum distance.
inline double log_sum_exp_neg(std::span<const double> d, double inv_sigma2, OpCounters* ops = nullptr) {
  double d_min = std::numeric_limits<double>::infinity();
  for (double v : d) d_min = std::min(d_min, v);
  double s = 0.0;
  for (double v : d) s += std::exp(-(v - d_min) * inv_sigma2);
  if (ops) {
    ops->exps += d.size();
    ops->logs += 1;
  }
  return -d_min * inv_sigma2 + std::log(s);
}

/// Reference form of the per-candidate subspace metric, scaled by 1/sigma^2.
/// The N-1 interfering symbols are sliced elementwise onto `slice_const`.
inline double subspace_distance(const ComplexVector& y1, std::complex<double> y2,
                                const PuncturedDecomposition& d, std::complex<double> x2,
                                const Constellation& slice_const, double sigma2) {
  const Eigen::Index m = d.a.size();
  if (y1.size() != m) throw Error(Errc::kDimensionMismatch, "y1 must have N-1 entries");
  double acc = std::norm(y2 - d.c * x2);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(d.a(i) > kPivotTolerance)) throw Error(Errc::kDegenerateA, "A has a vanishing diagonal entry");
    const std::complex<double> x1 = slice_const.slice((y1(i) - d.b(i) * x2) / d.a(i));
    acc += std::norm(y1(i) - d.a(i) * x1 - d.b(i) * x2);
  }
  return acc / sigma2;
}

/// Per-position slicing constellations for positions 0..N-2 of the permuted
/// layer order.
using SlicerSet = std::vector<const Constellation*>;

inline SlicerSet uniform_slicers(int n, ModulationType slice_const) {
  return SlicerSet(static_cast<std::size_t>(std::max(n - 1, 0)), &constellation(slice_const));
}

/// Slicers from known per-layer MTs (indexed by original layer).
inline SlicerSet aware_slicers(int layer, std::span<const ModulationType> mts) {
  const int n = static_cast<int>(mts.size());
  SlicerSet out;
  for (int pos = 0; pos + 1 < n; ++pos) {
    out.push_back(&constellation(mts[static_cast<std::size_t>(permuted_source(pos, layer, n))]));
  }
  return out;
}

/// Unscaled ||W^H y - R x||^2 as a function of the layer-of-interest symbol,
/// for one decomposition and one loaded observation.
class LayerMetric {
 public:
  LayerMetric(const PuncturedDecomposition& d, Expansion expansion, SlicerSet slicers)
      : n_(d.size()), expansion_(expansion), slicers_(std::move(slicers)), w_adj_(d.w.adjoint()),
        r_(d.r), y_(d.size()) {
    if (static_cast<int>(slicers_.size()) != n_ - 1) {
      throw Error(Errc::kDimensionMismatch, "need one slicer per interfering position");
    }
    for (int i = 0; i + 1 < n_; ++i) {
      const double diag = d.r(i, i).real();
      if (!(diag > kPivotTolerance)) {
        throw Error(expansion == Expansion::kSubspace ? Errc::kDegenerateA : Errc::kDegeneratePivot,
                    "vanishing diagonal at position " + std::to_string(i));
      }
      inv_diag_.push_back(1.0 / diag);
      diag2_.push_back(diag * diag);
    }
    c_ = d.r(n_ - 1, n_ - 1).real();
  }

  int size() const noexcept { return n_; }
  Expansion expansion() const noexcept { return expansion_; }

  void load(const ComplexVector& y) {
    if (y.size() != n_) throw Error(Errc::kDimensionMismatch, "observation length differs from channel size");
    y_.noalias() = w_adj_ * y;
  }

  const ComplexVector& transformed() const noexcept { return y_; }

  /// Distance for candidate x2; writes the resolved x1 (N-1 entries) if asked.
  double distance(std::complex<double> x2, std::complex<double>* x1_out = nullptr) const {
    const int last = n_ - 1;
    double acc = std::norm(y_(last) - c_ * x2);
    if (expansion_ == Expansion::kSubspace) {
      for (int i = 0; i < last; ++i) {
        const std::complex<double> z = (y_(i) - r_(i, last) * x2) * inv_diag_[static_cast<std::size_t>(i)];
        const std::complex<double> q = slicers_[static_cast<std::size_t>(i)]->slice(z);
        acc += diag2_[static_cast<std::size_t>(i)] * std::norm(z - q);
        if (x1_out) x1_out[i] = q;
      }
    } else {
      std::complex<double> resolved[kMaxSic];
      std::vector<std::complex<double>> spill;
      std::complex<double>* x1 = resolved;
      if (last > kMaxSic) {
        spill.resize(static_cast<std::size_t>(last));
        x1 = spill.data();
      }
      for (int i = last - 1; i >= 0; --i) {
        std::complex<double> rhs = y_(i) - r_(i, last) * x2;
        for (int j = i + 1; j < last; ++j) rhs -= r_(i, j) * x1[j];
        const std::complex<double> z = rhs * inv_diag_[static_cast<std::size_t>(i)];
        x1[i] = slicers_[static_cast<std::size_t>(i)]->slice(z);
        acc += diag2_[static_cast<std::size_t>(i)] * std::norm(z - x1[i]);
      }
      if (x1_out) std::copy(x1, x1 + last, x1_out);
    }
    return acc;
  }

  /// Unscaled distances for every point of `c`, in canonical order.
  void distances(const Constellation& c, std::span<double> out, OpCounters* ops = nullptr,
                 std::complex<double>* x1_out = nullptr) const {
    const int stride = n_ - 1;
    for (int k = 0; k < c.size(); ++k) {
      out[static_cast<std::size_t>(k)] = distance(c.point(k), x1_out ? x1_out + k * stride : nullptr);
    }
    if (ops) ops->distances += static_cast<std::uint64_t>(c.size());
  }

 private:
  static constexpr int kMaxSic = 8;

  int n_;
  Expansion expansion_;
  SlicerSet slicers_;
  ComplexMatrix w_adj_;
  ComplexMatrix r_;
  ComplexVector y_;
  std::vector<double> inv_diag_;
  std::vector<double> diag2_;
  double c_ = 0.0;
};

inline PuncturedDecomposition decomposition_for(const ComplexMatrix& h, int layer, Expansion expansion) {
  return expansion == Expansion::kSubspace ? decompose_for_layer(h, layer) : triangular_for_layer(h, layer);
}

}  // namespace mimo_mc
