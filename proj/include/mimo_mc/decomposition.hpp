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
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mimo_mc/error.hpp"

namespace mimo_mc {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPivotTolerance = 1e-12;

struct QrResult {
  ComplexMatrix q;
  ComplexMatrix r;
};

inline void require_finite(const ComplexMatrix& m, const char* what) {
  if (!m.allFinite()) throw Error(Errc::kNonFinite, std::string(what) + " has non-finite entries");
}

/// Householder QR of a square matrix: Q^H H = R with Q unitary and R upper
/// triangular with a real, positive diagonal.
inline QrResult qrd(const ComplexMatrix& h) {
  require_finite(h, "channel matrix");
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw Error(Errc::kDimensionMismatch, "qrd expects a non-empty square matrix");
  }
  const Eigen::Index n = h.cols();
  double max_col_norm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) max_col_norm = std::max(max_col_norm, h.col(j).norm());

  ComplexMatrix r = h;
  ComplexMatrix q = ComplexMatrix::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index len = n - k;
    ComplexVector v = r.col(k).tail(len);
    const double norm = v.norm();
    if (!(norm > kPivotTolerance * max_col_norm)) {
      throw Error(Errc::kRankDeficient, "pivot " + std::to_string(k) + " below tolerance");
    }
    const double mag0 = std::abs(v(0));
    const std::complex<double> phase = mag0 > 0.0 ? v(0) / mag0 : std::complex<double>(1.0, 0.0);
    v(0) += phase * norm;  // v = x - alpha e1 with alpha = -phase * ||x||
    const double vv = v.squaredNorm();
    if (vv == 0.0) continue;
    const double tau = 2.0 / vv;
    auto block = r.bottomRightCorner(len, len);
    Eigen::RowVectorXcd w = v.adjoint() * block;
    block.noalias() -= tau * v * w;
    auto qcols = q.rightCols(len);
    ComplexVector qv = qcols * v;
    qcols.noalias() -= tau * qv * v.adjoint();
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> d = r(k, k);
    const double mag = std::abs(d);
    const std::complex<double> phase = d / mag;
    r.row(k) *= std::conj(phase);
    q.col(k) *= phase;
    r(k, k) = mag;
    for (Eigen::Index i = k + 1; i < n; ++i) r(i, k) = 0.0;
  }
  return {std::move(q), std::move(r)};
}

/// Positions (row, col), zero-based and strictly above the diagonal, to null.
using PuncturePattern = std::vector<std::pair<int, int>>;

/// Everything above the diagonal except the last column (the layer-of-interest
/// structure: A diagonal, b dense, c scalar).
inline PuncturePattern layer_of_interest_pattern(int n) {
  PuncturePattern pattern;
  for (int row = 0; row < n; ++row) {
    for (int col = row + 1; col < n - 1; ++col) pattern.emplace_back(row, col);
  }
  return pattern;
}

/// W^H H_perm = R with unit-norm (generally non-orthogonal) columns in W and
/// the block partition R = [A b; 0 c] used by the per-layer metrics.
struct PuncturedDecomposition {
  ComplexMatrix w;
  ComplexMatrix r;
  int layer = 0;
  Eigen::VectorXd a;  // diagonal of the leading (N-1)x(N-1) block
  ComplexVector b;    // last column above c
  double c = 0.0;

  int size() const noexcept { return static_cast<int>(r.rows()); }

  void refresh_blocks() {
    const Eigen::Index n = r.rows();
    a.resize(n - 1);
    b.resize(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      a(i) = r(i, i).real();
      b(i) = r(i, n - 1);
    }
    c = r(n - 1, n - 1).real();
  }
};

/// Nulls the requested entries of R by elementary column operations on Q,
/// then renormalizes each touched column of Q (and its row of R) to unit
/// length. Rows are processed bottom to top and, within a row, left to right:
/// a row-m update touches columns >= m only, so earlier nulls in the same row
/// survive for any pattern.
inline PuncturedDecomposition puncture(ComplexMatrix q, ComplexMatrix r, PuncturePattern pattern,
                                       int layer = 0) {
  const int n = static_cast<int>(r.rows());
  if (r.cols() != n || q.rows() != n || q.cols() != n) {
    throw Error(Errc::kDimensionMismatch, "puncture expects square Q and R of equal size");
  }
  for (const auto& [row, col] : pattern) {
    if (row < 0 || col >= n || col <= row) {
      throw Error(Errc::kIndexOutOfRange, "puncture position must lie strictly above the diagonal");
    }
  }
  std::sort(pattern.begin(), pattern.end(), [](const auto& lhs, const auto& rhs) {
    return lhs.first != rhs.first ? lhs.first > rhs.first : lhs.second < rhs.second;
  });
  pattern.erase(std::unique(pattern.begin(), pattern.end()), pattern.end());

  std::size_t next = 0;
  while (next < pattern.size()) {
    const int row = pattern[next].first;
    for (; next < pattern.size() && pattern[next].first == row; ++next) {
      const int col = pattern[next].second;
      const double pivot = r(col, col).real();
      if (!(pivot > kPivotTolerance)) {
        throw Error(Errc::kDegeneratePivot, "r_mm below tolerance at column " + std::to_string(col));
      }
      const std::complex<double> f = r(row, col) / pivot;
      q.col(row) -= q.col(col) * std::conj(f);
      for (int j = col; j < n; ++j) r(row, j) -= r(col, j) * f;
    }
    const double norm = q.col(row).norm();
    r.row(row).tail(n - row) /= norm;
    q.col(row) /= norm;
  }

  PuncturedDecomposition d;
  d.w = std::move(q);
  d.r = std::move(r);
  d.layer = layer;
  d.refresh_blocks();
  return d;
}

/// Swaps column n with the last column.
inline ComplexMatrix permute_layer(const ComplexMatrix& h, int n) {
  if (n < 0 || n >= h.cols()) {
    throw Error(Errc::kIndexOutOfRange, "layer index " + std::to_string(n) + " out of range");
  }
  ComplexMatrix out = h;
  out.col(n).swap(out.col(h.cols() - 1));
  return out;
}

/// Original layer index carried at `position` after swapping `layer` to the end.
constexpr int permuted_source(int position, int layer, int n) {
  if (position == n - 1) return layer;
  if (position == layer) return n - 1;
  return position;
}

inline PuncturedDecomposition decompose_for_layer(const ComplexMatrix& h, int n) {
  const ComplexMatrix perm = permute_layer(h, n);
  auto [q, r] = qrd(perm);
  return puncture(std::move(q), std::move(r), layer_of_interest_pattern(static_cast<int>(h.cols())), n);
}

/// Plain QRD of the permuted channel, in the same container (the SIC path).
inline PuncturedDecomposition triangular_for_layer(const ComplexMatrix& h, int n) {
  auto [q, r] = qrd(permute_layer(h, n));
  return puncture(std::move(q), std::move(r), {}, n);
}

struct SplitObservation {
  ComplexVector upper;  // first N-1 entries of W^H y
  std::complex<double> last;
};

inline SplitObservation transform_observation(const ComplexVector& y, const PuncturedDecomposition& d) {
  if (y.size() != d.size()) {
    throw Error(Errc::kDimensionMismatch, "observation length differs from channel size");
  }
  const ComplexVector t = d.w.adjoint() * y;
  return {t.head(t.size() - 1), t(t.size() - 1)};
}

/// sigma^2 W^H W: the covariance of the transformed noise. Its diagonal is
/// sigma^2; off-diagonal terms are nonzero once W is punctured.
inline ComplexMatrix transformed_noise_covariance(const PuncturedDecomposition& d, double sigma2) {
  return sigma2 * (d.w.adjoint() * d.w);
}

}  // namespace mimo_mc
