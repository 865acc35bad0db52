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

// mc: Monte-Carlo runner for per-layer MIMO modulation classification.
//
//   mc ccr --config <path> [--snr-db a:b:step] [--seed u64] [--classifiers list]
//          [--rho f] [--out path] [--threads k] [--trace path]
//   mc ser ... [--layer-mt qam64] [--slice-const qam1024]
//   mc ops --config <path>
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimo_mc/mimo_mc.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> snr_db;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> classifiers;
  std::optional<std::string> hypotheses;
  std::optional<double> rho;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> frames;
  std::optional<int> observations;
  std::optional<std::string> trace;
  std::optional<std::string> layer_mt;
  std::optional<std::string> slice_const;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key = value experiment file");
  cmd->add_option("--snr-db", o.snr_db, "SNR grid, a:b:step or comma list");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--classifiers", o.classifiers, "comma-separated classifier names");
  cmd->add_option("--hypotheses", o.hypotheses, "comma-separated modulation names");
  cmd->add_option("--rho", o.rho, "Kronecker correlation factor");
  cmd->add_option("--out", o.out, "CSV output path (default stdout)");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("--frames", o.frames, "frames per SNR point");
  cmd->add_option("-T,--observations", o.observations, "observations per frame");
  cmd->add_option("--trace", o.trace, "per-frame JSON-lines log");
  cmd->add_option("--slice-const", o.slice_const, "dense slicing constellation");
}

mimo_mc::ExperimentConfig resolve(const Overrides& o) {
  mimo_mc::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = mimo_mc::load_config_file(o.config_path);
  auto set = [&cfg](const char* key, const std::string& value) { mimo_mc::apply_setting(cfg, key, value); };
  if (o.snr_db) set("snr_db", *o.snr_db);
  if (o.seed) cfg.seed = *o.seed;
  if (o.classifiers) set("classifiers", *o.classifiers);
  if (o.hypotheses) set("hypotheses", *o.hypotheses);
  if (o.rho) cfg.rho = *o.rho;
  if (o.out) cfg.output_path = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.frames) cfg.frames_per_point = *o.frames;
  if (o.observations) cfg.observations = *o.observations;
  if (o.trace) cfg.trace_path = *o.trace;
  if (o.layer_mt) set("layer_mt", *o.layer_mt);
  if (o.slice_const) set("slice_const", *o.slice_const);
  mimo_mc::validate(cfg);
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mimo_mc::Error(mimo_mc::Errc::kConfig, "cannot write '" + path + "'");
  out << text;
}

void emit_trace(const mimo_mc::ExperimentConfig& cfg, const mimo_mc::ExperimentResult& r) {
  if (cfg.trace_path.empty()) return;
  std::string text;
  for (const auto& line : r.trace) text += line + '\n';
  emit(cfg.trace_path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-layer MIMO modulation classification via subspace detection"};
  app.require_subcommand(1);
  Overrides o;

  auto* ccr = app.add_subcommand("ccr", "correct-classification-ratio sweep");
  add_common(ccr, o);
  auto* ser = app.add_subcommand("ser", "uncoded symbol-error-rate sweep on one layer");
  add_common(ser, o);
  ser->add_option("--layer-mt", o.layer_mt, "MT pinned on the layer of interest");
  auto* ops = app.add_subcommand("ops", "per-observation operation counts against complexity bounds");
  add_common(ops, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const mimo_mc::ExperimentConfig cfg = resolve(o);
    if (ccr->parsed() || ser->parsed()) {
      const auto result = ccr->parsed() ? mimo_mc::run_ccr_experiment(cfg, !cfg.trace_path.empty())
                                        : mimo_mc::run_ser_experiment(cfg, !cfg.trace_path.empty());
      emit(cfg.output_path, mimo_mc::to_csv(result.rows));
      emit_trace(cfg, result);
      if (result.numerical_failure()) {
        std::cerr << "numerical failure: " << result.numerical_failures << " of " << result.frames_total
                  << " frames hit a decomposition error\n";
        return kExitNumerical;
      }
      return 0;
    }
    const auto rows = mimo_mc::count_ops_report(cfg);
    emit(cfg.output_path, mimo_mc::ops_to_csv(rows));
    for (const auto& r : rows) {
      if (!r.within_bound()) {
        std::cerr << r.classifier << " exceeds its operation bound\n";
        return kExitNumerical;
      }
    }
    return 0;
  } catch (const mimo_mc::Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == mimo_mc::Errc::kConfig ? kExitConfig : kExitNumerical;
  }
}
