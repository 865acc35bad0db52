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
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mimo_mc/error.hpp"

namespace mimo_mc {

using cd = std::complex<double>;

enum class ModulationType { kPhi, kQpsk, kQam16, kQam64, kQam256, kQam1024 };

inline constexpr std::array<ModulationType, 6> kAllModulations = {
    ModulationType::kPhi,   ModulationType::kQpsk,   ModulationType::kQam16,
    ModulationType::kQam64, ModulationType::kQam256, ModulationType::kQam1024};

constexpr int bits_per_symbol(ModulationType mt) {
  switch (mt) {
    case ModulationType::kPhi: return 0;
    case ModulationType::kQpsk: return 2;
    case ModulationType::kQam16: return 4;
    case ModulationType::kQam64: return 6;
    case ModulationType::kQam256: return 8;
    case ModulationType::kQam1024: return 10;
  }
  return 0;
}

constexpr int cardinality(ModulationType mt) { return 1 << bits_per_symbol(mt); }

inline std::string_view modulation_name(ModulationType mt) {
  switch (mt) {
    case ModulationType::kPhi: return "phi";
    case ModulationType::kQpsk: return "qpsk";
    case ModulationType::kQam16: return "qam16";
    case ModulationType::kQam64: return "qam64";
    case ModulationType::kQam256: return "qam256";
    case ModulationType::kQam1024: return "qam1024";
  }
  return "?";
}

inline std::optional<ModulationType> parse_modulation(std::string_view name) {
  for (auto mt : kAllModulations) {
    if (modulation_name(mt) == name) return mt;
  }
  return std::nullopt;
}

/// Normalized square-QAM (or silent) symbol set with per-axis Gray labels.
///
/// Points are stored in canonical order: index = i_re * L + i_im, where
/// i_re, i_im in [0, L) index the axis levels (2i - (L-1)) * scale in
/// ascending order. Ties in slicing resolve to the earliest index, which for
/// this ordering is the lower level on each axis.
class Constellation {
 public:
  Constellation() = default;

  explicit Constellation(ModulationType mt) : type_(mt), bits_(mimo_mc::bits_per_symbol(mt)) {
    if (mt == ModulationType::kPhi) {
      levels_ = 1;
      scale_ = 0.0;
      points_ = {cd(0.0, 0.0)};
      labels_ = {0};
      return;
    }
    const int m = cardinality(mt);
    levels_ = 1 << (bits_ / 2);
    scale_ = 1.0 / std::sqrt(2.0 * (m - 1) / 3.0);
    inv_scale_ = 1.0 / scale_;
    points_.reserve(m);
    labels_.reserve(m);
    const int half = bits_ / 2;
    for (int ir = 0; ir < levels_; ++ir) {
      for (int ii = 0; ii < levels_; ++ii) {
        points_.emplace_back(level(ir), level(ii));
        labels_.push_back((gray(ir) << half) | gray(ii));
      }
    }
  }

  ModulationType type() const noexcept { return type_; }
  int bits_per_symbol() const noexcept { return bits_; }
  int size() const noexcept { return static_cast<int>(points_.size()); }
  int levels_per_axis() const noexcept { return levels_; }
  double scale() const noexcept { return scale_; }

  std::span<const cd> points() const noexcept { return points_; }
  const cd& point(int index) const { return points_[static_cast<std::size_t>(index)]; }
  std::uint32_t label(int index) const { return labels_[static_cast<std::size_t>(index)]; }

  /// Bit k of a label, k = 0 being the most significant.
  int bit(int index, int k) const {
    return static_cast<int>((label(index) >> (bits_ - 1 - k)) & 1U);
  }

  /// Index of the nearest point (the slicing operator).
  int nearest_index(cd value) const noexcept {
    if (levels_ == 1) return 0;
    return axis_index(value.real()) * levels_ + axis_index(value.imag());
  }

  cd slice(cd value) const noexcept {
    if (levels_ == 1) return points_[0];
    return {level(axis_index(value.real())), level(axis_index(value.imag()))};
  }

  /// Index of an exact member, or nullopt.
  std::optional<int> index_of(cd x) const noexcept {
    const int idx = nearest_index(x);
    if (points_[static_cast<std::size_t>(idx)] == x) return idx;
    return std::nullopt;
  }

 private:
  static std::uint32_t gray(int i) { return static_cast<std::uint32_t>(i ^ (i >> 1)); }

  double level(int i) const noexcept { return (2.0 * i - (levels_ - 1)) * scale_; }

  int axis_index(double v) const noexcept {
    // Half-way values round down so the lower level (earlier index) wins.
    const double u = 0.5 * (v * inv_scale_ + (levels_ - 1));
    const double r = std::ceil(u - 0.5);
    if (!(r > 0.0)) return 0;
    if (r >= levels_ - 1) return levels_ - 1;
    return static_cast<int>(r);
  }

  ModulationType type_ = ModulationType::kPhi;
  int bits_ = 0;
  int levels_ = 1;
  double scale_ = 0.0;
  double inv_scale_ = 0.0;
  std::vector<cd> points_;
  std::vector<std::uint32_t> labels_;
};

inline Constellation build_constellation(ModulationType mt) { return Constellation(mt); }

/// Shared immutable instance per modulation type.
inline const Constellation& constellation(ModulationType mt) {
  static const std::array<Constellation, 6> table = {
      Constellation(ModulationType::kPhi),   Constellation(ModulationType::kQpsk),
      Constellation(ModulationType::kQam16), Constellation(ModulationType::kQam64),
      Constellation(ModulationType::kQam256), Constellation(ModulationType::kQam1024)};
  return table[static_cast<std::size_t>(mt)];
}

inline cd slice(cd value, const Constellation& c) { return c.slice(value); }

inline std::vector<std::uint8_t> symbol_to_bits(cd x, const Constellation& c) {
  const auto idx = c.index_of(x);
  if (!idx) {
    throw Error(Errc::kNotAMember, "symbol is not a point of " +
                                       std::string(modulation_name(c.type())));
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(c.bits_per_symbol()));
  for (int k = 0; k < c.bits_per_symbol(); ++k) {
    bits[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(c.bit(*idx, k));
  }
  return bits;
}

inline cd bits_to_symbol(std::span<const std::uint8_t> bits, const Constellation& c) {
  if (static_cast<int>(bits.size()) != c.bits_per_symbol()) {
    throw Error(Errc::kDimensionMismatch, "label length does not match bits per symbol");
  }
  std::uint32_t label = 0;
  for (auto b : bits) label = (label << 1) | (b & 1U);
  for (int i = 0; i < c.size(); ++i) {
    if (c.label(i) == label) return c.point(i);
  }
  throw Error(Errc::kNotAMember, "no point carries this label");
}

}  // namespace mimo_mc
