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

#include <stdexcept>
#include <string>

namespace mimo_mc {

enum class Errc {
  kNotAMember,
  kRankDeficient,
  kDegeneratePivot,
  kDegenerateA,
  kIndexOutOfRange,
  kDimensionMismatch,
  kNonPositiveSnr,
  kNonFinite,
  kTooLarge,
  kEmptyBitClass,
  kCacheMiss,
  kConfig,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kNotAMember: return "NotAMember";
    case Errc::kRankDeficient: return "RankDeficient";
    case Errc::kDegeneratePivot: return "DegeneratePivot";
    case Errc::kDegenerateA: return "DegenerateA";
    case Errc::kIndexOutOfRange: return "IndexOutOfRange";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNonPositiveSnr: return "NonPositiveSNR";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kTooLarge: return "TooLarge";
    case Errc::kEmptyBitClass: return "EmptyBitClass";
    case Errc::kCacheMiss: return "CacheMiss";
    case Errc::kConfig: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Errors raised by the linear-algebra path; the harness counts these per frame.
  bool is_numerical() const noexcept {
    return code_ == Errc::kRankDeficient || code_ == Errc::kDegeneratePivot ||
           code_ == Errc::kDegenerateA || code_ == Errc::kNonFinite;
  }

 private:
  Errc code_;
};

}  // namespace mimo_mc
