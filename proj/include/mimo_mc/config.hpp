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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mimo_mc/classifiers.hpp"
#include "mimo_mc/constellation.hpp"
#include "mimo_mc/error.hpp"

namespace mimo_mc {

struct ExperimentConfig {
  int n = 4;
  std::vector<double> snr_grid_db = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
  int frames_per_point = 200;
  int observations = 1000;  // T
  std::vector<ModulationType> hypotheses = {ModulationType::kPhi, ModulationType::kQpsk, ModulationType::kQam16,
                                            ModulationType::kQam64, ModulationType::kQam256};
  std::vector<ClassifierKind> classifiers = {ClassifierKind::kSubspaceLogMap, ClassifierKind::kSubspaceMaxLogMap,
                                             ClassifierKind::kZfAlrt, ClassifierKind::kLordLogMap,
                                             ClassifierKind::kLordMaxLogMap};
  double rho = 0.0;
  ModulationType slice_const = ModulationType::kQam1024;
  std::uint64_t seed = 1;
  std::string output_path;  // empty: stdout
  int threads = 1;
  // SER runs: MT pinned on the layer of interest.
  ModulationType layer_mt = ModulationType::kQam64;
  int layer_of_interest = 0;
  ZfNoiseModel zf_noise = ZfNoiseModel::kColumnNorm;
  std::string trace_path;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    const auto item = trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!item.empty()) out.push_back(item);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

[[noreturn]] inline void field_error(std::string_view key, const std::string& msg) {
  throw Error(Errc::kConfig, "field '" + std::string(key) + "': " + msg);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) field_error(key, "cannot parse '" + s + "' as a number");
  return value;
}

}  // namespace detail

/// "a:b:step" (inclusive of b) or a comma-separated list.
inline std::vector<double> parse_snr_grid(std::string_view text) {
  constexpr std::string_view key = "snr_db";
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = detail::split_list(text, ':');
    if (parts.size() != 3) detail::field_error(key, "range must be a:b:step");
    const double a = detail::parse_number<double>(key, parts[0]);
    const double b = detail::parse_number<double>(key, parts[1]);
    const double step = detail::parse_number<double>(key, parts[2]);
    if (!(step > 0.0) || b < a) detail::field_error(key, "range needs step > 0 and b >= a");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) grid.push_back(a + static_cast<double>(i) * step);
  } else {
    for (const auto& item : detail::split_list(text)) grid.push_back(detail::parse_number<double>(key, item));
  }
  if (grid.empty()) detail::field_error(key, "grid is empty");
  return grid;
}

inline std::vector<ModulationType> parse_modulation_list(std::string_view key, std::string_view text) {
  std::vector<ModulationType> out;
  for (const auto& item : detail::split_list(text)) {
    const auto mt = parse_modulation(item);
    if (!mt) detail::field_error(key, "unknown modulation '" + item + "'");
    out.push_back(*mt);
  }
  return out;
}

inline std::vector<ClassifierKind> parse_classifier_list(std::string_view text) {
  std::vector<ClassifierKind> out;
  for (const auto& item : detail::split_list(text)) {
    const auto kind = parse_classifier(item);
    if (!kind) detail::field_error("classifiers", "unknown classifier '" + item + "'");
    out.push_back(*kind);
  }
  return out;
}

inline void apply_setting(ExperimentConfig& cfg, std::string_view raw_key, std::string_view value) {
  std::string key = detail::trim(raw_key);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (key == "n") {
    cfg.n = detail::parse_number<int>(key, value);
  } else if (key == "snr_db" || key == "snr_grid_db") {
    cfg.snr_grid_db = parse_snr_grid(value);
  } else if (key == "frames_per_point" || key == "frames") {
    cfg.frames_per_point = detail::parse_number<int>(key, value);
  } else if (key == "t" || key == "observations") {
    cfg.observations = detail::parse_number<int>(key, value);
  } else if (key == "hypotheses" || key == "hypothesis_set") {
    cfg.hypotheses = parse_modulation_list(key, value);
  } else if (key == "classifiers") {
    cfg.classifiers = parse_classifier_list(value);
  } else if (key == "rho") {
    cfg.rho = detail::parse_number<double>(key, value);
  } else if (key == "slice_const") {
    const auto mt = parse_modulation(detail::trim(value));
    if (!mt) detail::field_error(key, "unknown modulation '" + detail::trim(value) + "'");
    cfg.slice_const = *mt;
  } else if (key == "seed") {
    cfg.seed = detail::parse_number<std::uint64_t>(key, value);
  } else if (key == "output" || key == "output_path" || key == "out") {
    cfg.output_path = detail::trim(value);
  } else if (key == "threads") {
    cfg.threads = detail::parse_number<int>(key, value);
  } else if (key == "layer_mt") {
    const auto mt = parse_modulation(detail::trim(value));
    if (!mt) detail::field_error(key, "unknown modulation '" + detail::trim(value) + "'");
    cfg.layer_mt = *mt;
  } else if (key == "layer_of_interest") {
    cfg.layer_of_interest = detail::parse_number<int>(key, value);
  } else if (key == "zf_noise") {
    const auto v = detail::trim(value);
    if (v == "column-norm") {
      cfg.zf_noise = ZfNoiseModel::kColumnNorm;
    } else if (v == "post-equalization") {
      cfg.zf_noise = ZfNoiseModel::kPostEqualization;
    } else {
      detail::field_error(key, "expected column-norm or post-equalization");
    }
  } else if (key == "trace") {
    cfg.trace_path = detail::trim(value);
  } else {
    detail::field_error(key, "unknown key");
  }
}

/// `key = value` lines; `#` starts a comment.
inline void parse_config_text(std::string_view text, ExperimentConfig& cfg) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfig, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  parse_config_text(buf.str(), cfg);
  return cfg;
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1) detail::field_error("n", "must be at least 1");
  if (cfg.frames_per_point < 1) detail::field_error("frames_per_point", "must be at least 1");
  if (cfg.observations < 1) detail::field_error("t", "must be at least 1");
  if (cfg.threads < 1) detail::field_error("threads", "must be at least 1");
  if (cfg.snr_grid_db.empty()) detail::field_error("snr_db", "grid is empty");
  for (double s : cfg.snr_grid_db) {
    if (!std::isfinite(s)) detail::field_error("snr_db", "grid values must be finite");
  }
  if (cfg.hypotheses.empty()) detail::field_error("hypotheses", "at least one hypothesis required");
  if (cfg.classifiers.empty()) detail::field_error("classifiers", "at least one classifier required");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) detail::field_error("rho", "must lie in [0, 1)");
  if (cfg.layer_of_interest < 0 || cfg.layer_of_interest >= cfg.n) {
    detail::field_error("layer_of_interest", "must index a layer in [0, N)");
  }
}

}  // namespace mimo_mc
