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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mimo_mc/channel.hpp"
#include "mimo_mc/classifiers.hpp"
#include "mimo_mc/config.hpp"
#include "mimo_mc/detection.hpp"

namespace mimo_mc {

struct MetricRow {
  std::string classifier;
  double snr_db = 0.0;
  std::optional<double> ccr;
  std::optional<double> ccr_ci95;
  std::optional<double> ser;
  std::int64_t frames = 0;
  std::int64_t layers = 0;
  std::int64_t errors = 0;  // misclassified layers or symbol errors
  std::int64_t trials = 0;  // denominator of ccr or ser
  OpCounters ops;
};

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::int64_t frames_total = 0;
  std::int64_t numerical_failures = 0;  // frames with a decomposition error
  std::vector<std::string> trace;       // one JSON record per frame

  /// More than 0.1% of frames hit a decomposition error.
  bool numerical_failure() const { return numerical_failures * 1000 > frames_total; }
};

/// Wald half-width of a 95% binomial confidence interval.
inline double binomial_ci95(double p, std::int64_t trials) {
  if (trials <= 0) return 0.0;
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

/// Runs fn(i) for i in [0, count) on `threads` workers; results come back in
/// index order, so the reduction does not depend on scheduling.
template <class Result>
std::vector<Result> parallel_map(std::size_t count, int threads, const std::function<Result(std::size_t)>& fn) {
  std::vector<Result> out(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline int widest_cardinality(std::span<const ModulationType> hypotheses) {
  int widest = 1;
  for (auto mt : hypotheses) widest = std::max(widest, cardinality(mt));
  return widest;
}

/// Fails early when a joint classifier cannot enumerate this configuration.
inline void check_joint_feasible(const ExperimentConfig& cfg) {
  for (auto kind : cfg.classifiers) {
    if (!is_joint(kind)) continue;
    std::uint64_t lattice = 1;
    std::uint64_t joint = 1;
    for (int l = 0; l < cfg.n; ++l) {
      lattice *= static_cast<std::uint64_t>(widest_cardinality(cfg.hypotheses));
      joint *= cfg.hypotheses.size();
      if (lattice > kJointLatticeLimit || joint > kJointLatticeLimit) {
        detail::field_error("classifiers", std::string(classifier_name(kind)) +
                                               " cannot enumerate this N and hypothesis set (limit 2^20)");
      }
    }
  }
}

inline FrameSpec frame_spec(const ExperimentConfig& cfg, double snr_db) {
  FrameSpec spec;
  spec.n = cfg.n;
  spec.observations = cfg.observations;
  spec.hypotheses = cfg.hypotheses;
  spec.snr_db = snr_db;
  spec.seed = cfg.seed;
  spec.rho = cfg.rho;
  return spec;
}

/// Per-layer decisions of every configured classifier on one frame.
struct FrameDecisions {
  std::vector<std::vector<ModulationType>> decided;  // [classifier][layer]
  std::vector<OpCounters> ops;                       // [classifier]
  bool numerical_error = false;
};

inline FrameDecisions classify_frame(const ExperimentConfig& cfg, const Frame& frame) {
  const std::size_t k_count = cfg.classifiers.size();
  const int n = frame.size();
  FrameDecisions out;
  out.decided.assign(k_count, std::vector<ModulationType>(static_cast<std::size_t>(n), ModulationType::kPhi));
  out.ops.assign(k_count, OpCounters{});
  const ObservationStream stream(frame);
  const std::span<const ModulationType> hyps = cfg.hypotheses;

  auto index_of = [&](ClassifierKind kind) -> int {
    for (std::size_t k = 0; k < k_count; ++k) {
      if (cfg.classifiers[k] == kind) return static_cast<int>(k);
    }
    return -1;
  };

  try {
    // Subspace and LORD: the Log-MAP and Max-Log-MAP variants share distances.
    for (auto [expansion, log_kind, max_kind] :
         {std::tuple{Expansion::kSubspace, ClassifierKind::kSubspaceLogMap, ClassifierKind::kSubspaceMaxLogMap},
          std::tuple{Expansion::kLord, ClassifierKind::kLordLogMap, ClassifierKind::kLordMaxLogMap}}) {
      const int li = index_of(log_kind);
      const int mi = index_of(max_kind);
      if (li < 0 && mi < 0) continue;
      for (int layer = 0; layer < n; ++layer) {
        LayerClassifier clf(*stream.h, layer, hyps, cfg.slice_const, expansion);
        HypothesisScore log_score(layer, hyps.size());
        HypothesisScore max_score(layer, hyps.size());
        for (const auto& obs : frame.observations) {
          clf.fold(obs.y, frame.sigma2, li >= 0 ? &log_score : nullptr,
                   li >= 0 ? &out.ops[static_cast<std::size_t>(li)] : nullptr, mi >= 0 ? &max_score : nullptr,
                   mi >= 0 ? &out.ops[static_cast<std::size_t>(mi)] : nullptr);
        }
        const auto l = static_cast<std::size_t>(layer);
        if (li >= 0) out.decided[static_cast<std::size_t>(li)][l] = hyps[static_cast<std::size_t>(log_score.winner())];
        if (mi >= 0) out.decided[static_cast<std::size_t>(mi)][l] = hyps[static_cast<std::size_t>(max_score.winner())];
      }
    }
    if (const int zi = index_of(ClassifierKind::kZfAlrt); zi >= 0) {
      for (int layer = 0; layer < n; ++layer) {
        const HypothesisScore s =
            classify_zf_alrt(stream, layer, hyps, cfg.zf_noise, &out.ops[static_cast<std::size_t>(zi)]);
        out.decided[static_cast<std::size_t>(zi)][static_cast<std::size_t>(layer)] =
            hyps[static_cast<std::size_t>(s.winner())];
      }
    }
    for (auto kind : {ClassifierKind::kLogMap, ClassifierKind::kMaxLogMap}) {
      if (const int ji = index_of(kind); ji >= 0) {
        const JointDecision d =
            classify_joint(stream, hyps, kind == ClassifierKind::kLogMap, &out.ops[static_cast<std::size_t>(ji)]);
        out.decided[static_cast<std::size_t>(ji)] = d.mts;
      }
    }
  } catch (const Error& e) {
    if (!e.is_numerical()) throw;
    out.numerical_error = true;
  }
  return out;
}

inline std::string mt_list_json(std::span<const ModulationType> mts) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto mt : mts) arr.push_back(std::string(modulation_name(mt)));
  return arr.dump();
}

/// Correct-classification ratio per classifier and SNR point.
inline ExperimentResult run_ccr_experiment(const ExperimentConfig& cfg, bool with_trace = false) {
  validate(cfg);
  check_joint_feasible(cfg);
  ExperimentResult result;
  for (double snr_db : cfg.snr_grid_db) {
    const FrameSpec spec = frame_spec(cfg, snr_db);
    struct Outcome {
      FrameDecisions decisions;
      std::vector<ModulationType> truth;
    };
    const auto outcomes = parallel_map<Outcome>(
        static_cast<std::size_t>(cfg.frames_per_point), cfg.threads, [&](std::size_t i) {
          const Frame frame = draw_frame(spec, static_cast<std::uint64_t>(i));
          return Outcome{classify_frame(cfg, frame), frame.mts};
        });

    std::vector<MetricRow> rows(cfg.classifiers.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].classifier = std::string(classifier_name(cfg.classifiers[k]));
      rows[k].snr_db = snr_db;
    }
    for (std::size_t f = 0; f < outcomes.size(); ++f) {
      const auto& o = outcomes[f];
      ++result.frames_total;
      if (o.decisions.numerical_error) ++result.numerical_failures;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        auto& row = rows[k];
        ++row.frames;
        row.ops += o.decisions.ops[k];
        for (std::size_t l = 0; l < o.truth.size(); ++l) {
          ++row.layers;
          ++row.trials;
          if (o.decisions.numerical_error || o.decisions.decided[k][l] != o.truth[l]) ++row.errors;
        }
      }
      if (with_trace) {
        nlohmann::ordered_json rec;
        rec["snr_db"] = snr_db;
        rec["frame"] = f;
        rec["true_mts"] = nlohmann::json::parse(mt_list_json(o.truth));
        rec["numerical_error"] = o.decisions.numerical_error;
        nlohmann::ordered_json dec;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          dec[rows[k].classifier] = nlohmann::json::parse(mt_list_json(o.decisions.decided[k]));
        }
        rec["decisions"] = dec;
        result.trace.push_back(rec.dump());
      }
    }
    for (auto& row : rows) {
      const double p = 1.0 - static_cast<double>(row.errors) / static_cast<double>(row.trials);
      row.ccr = p;
      row.ccr_ci95 = binomial_ci95(p, row.trials);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

/// Detectors compared in SER runs, in output order.
inline constexpr std::array<std::string_view, 4> kSerDetectors = {"subspace", "lord", "subspace-mt-aware",
                                                                  "lord-mt-aware"};

/// Uncoded symbol error rate on the layer of interest, whose MT is pinned to
/// `layer_mt`; the other layers hop over the hypothesis set per frame.
inline ExperimentResult run_ser_experiment(const ExperimentConfig& cfg, bool with_trace = false) {
  validate(cfg);
  ExperimentResult result;
  const int layer = cfg.layer_of_interest;
  for (double snr_db : cfg.snr_grid_db) {
    FrameSpec spec = frame_spec(cfg, snr_db);
    spec.fixed_layer = std::pair{layer, cfg.layer_mt};
    struct Outcome {
      std::array<std::int64_t, 4> errors{};
      std::array<OpCounters, 4> ops{};
      std::int64_t symbols = 0;
      bool numerical_error = false;
      std::vector<ModulationType> truth;
    };
    const auto outcomes = parallel_map<Outcome>(
        static_cast<std::size_t>(cfg.frames_per_point), cfg.threads, [&](std::size_t i) {
          const Frame frame = draw_frame(spec, static_cast<std::uint64_t>(i));
          Outcome o;
          o.truth = frame.mts;
          try {
            const int n = frame.size();
            std::array<LayerDetector, 4> detectors = {
                LayerDetector(frame.channel.h, layer, cfg.layer_mt, uniform_slicers(n, cfg.slice_const),
                              Expansion::kSubspace),
                LayerDetector(frame.channel.h, layer, cfg.layer_mt, uniform_slicers(n, cfg.slice_const),
                              Expansion::kLord),
                LayerDetector(frame.channel.h, layer, cfg.layer_mt, aware_slicers(layer, frame.mts),
                              Expansion::kSubspace),
                LayerDetector(frame.channel.h, layer, cfg.layer_mt, aware_slicers(layer, frame.mts),
                              Expansion::kLord)};
            const std::uint64_t per_obs = static_cast<std::uint64_t>(cardinality(cfg.layer_mt));
            for (const auto& obs : frame.observations) {
              ++o.symbols;
              const int truth = obs.symbol_index[static_cast<std::size_t>(layer)];
              for (std::size_t d = 0; d < detectors.size(); ++d) {
                const auto dist = detectors[d].distances(obs.y);
                o.ops[d].distances += per_obs;
                if (argmin_index(dist) != truth) ++o.errors[d];
              }
            }
          } catch (const Error& e) {
            if (!e.is_numerical()) throw;
            o.numerical_error = true;
            o.symbols = cfg.observations;
            o.errors.fill(cfg.observations);
          }
          return o;
        });

    std::vector<MetricRow> rows(kSerDetectors.size());
    for (std::size_t d = 0; d < rows.size(); ++d) {
      rows[d].classifier = std::string(kSerDetectors[d]);
      rows[d].snr_db = snr_db;
    }
    for (std::size_t f = 0; f < outcomes.size(); ++f) {
      const auto& o = outcomes[f];
      ++result.frames_total;
      if (o.numerical_error) ++result.numerical_failures;
      for (std::size_t d = 0; d < rows.size(); ++d) {
        ++rows[d].frames;
        ++rows[d].layers;
        rows[d].trials += o.symbols;
        rows[d].errors += o.errors[d];
        rows[d].ops += o.ops[d];
      }
      if (with_trace) {
        nlohmann::ordered_json rec;
        rec["snr_db"] = snr_db;
        rec["frame"] = f;
        rec["true_mts"] = nlohmann::json::parse(mt_list_json(o.truth));
        rec["numerical_error"] = o.numerical_error;
        nlohmann::ordered_json errs;
        for (std::size_t d = 0; d < rows.size(); ++d) errs[std::string(kSerDetectors[d])] = o.errors[d];
        rec["symbol_errors"] = errs;
        result.trace.push_back(rec.dump());
      }
    }
    for (auto& row : rows) {
      row.ser = static_cast<double>(row.errors) / static_cast<double>(row.trials);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

struct OpsRow {
  std::string classifier;
  OpCounters per_observation;  // largest count seen for a single observation
  OpCounters bound;
  bool skipped = false;  // joint enumeration infeasible for this configuration

  bool within_bound() const {
    return skipped || (per_observation.distances <= bound.distances && per_observation.exps <= bound.exps &&
                       per_observation.logs <= bound.logs);
  }
};

/// Measured per-observation operation counts (all layers) against the
/// complexity bounds, over the frames of the first SNR point.
inline std::vector<OpsRow> count_ops_report(const ExperimentConfig& cfg) {
  validate(cfg);
  const FrameSpec spec = frame_spec(cfg, cfg.snr_grid_db.front());
  const int s = static_cast<int>(cfg.hypotheses.size());
  const int widest = widest_cardinality(cfg.hypotheses);
  std::vector<OpsRow> rows;
  for (auto kind : cfg.classifiers) {
    OpsRow row;
    row.classifier = std::string(classifier_name(kind));
    row.bound = complexity_bound(kind, cfg.n, s, widest);
    if (is_joint(kind)) {
      ExperimentConfig probe = cfg;
      probe.classifiers = {kind};
      try {
        check_joint_feasible(probe);
      } catch (const Error&) {
        row.skipped = true;
        rows.push_back(row);
        continue;
      }
    }
    auto keep_max = [&row](const OpCounters& c) {
      row.per_observation.distances = std::max(row.per_observation.distances, c.distances);
      row.per_observation.exps = std::max(row.per_observation.exps, c.exps);
      row.per_observation.logs = std::max(row.per_observation.logs, c.logs);
    };
    for (int f = 0; f < cfg.frames_per_point; ++f) {
      const Frame frame = draw_frame(spec, static_cast<std::uint64_t>(f));
      const ObservationStream stream(frame);
      const int n = frame.size();
      std::vector<LayerClassifier> layer_clfs;
      std::vector<ZfLayerClassifier> zf_clfs;
      const auto expansion = expansion_of(kind);
      for (int l = 0; l < n; ++l) {
        if (expansion) layer_clfs.emplace_back(frame.channel.h, l, cfg.hypotheses, cfg.slice_const, *expansion);
        if (kind == ClassifierKind::kZfAlrt) zf_clfs.emplace_back(frame.channel.h, l, cfg.hypotheses, cfg.zf_noise);
      }
      HypothesisScore scratch(0, cfg.hypotheses.size());
      for (std::size_t t = 0; t < frame.observations.size(); ++t) {
        OpCounters obs_ops;
        const auto& y = frame.observations[t].y;
        if (expansion) {
          const bool log_map = uses_log_sum(kind);
          for (auto& clf : layer_clfs) {
            clf.fold(y, frame.sigma2, log_map ? &scratch : nullptr, log_map ? &obs_ops : nullptr,
                     log_map ? nullptr : &scratch, log_map ? nullptr : &obs_ops);
          }
        } else if (kind == ClassifierKind::kZfAlrt) {
          for (auto& clf : zf_clfs) clf.fold(y, frame.sigma2, scratch, &obs_ops);
        } else {
          const ObservationStream one(frame.channel.h, frame.sigma2, std::span(frame.observations).subspan(t, 1));
          classify_joint(one, cfg.hypotheses, kind == ClassifierKind::kLogMap, &obs_ops);
        }
        keep_max(obs_ops);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

inline std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_opt(const std::optional<double>& v) { return v ? format_g6(*v) : std::string(); }

}  // namespace detail

inline constexpr std::string_view kCsvHeader = "classifier,snr_db,ccr,ccr_ci95,ser,frames,layers,dist_ops,exp_ops,log_ops";

inline std::string to_csv(std::span<const MetricRow> rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.classifier + ',' + detail::format_g6(r.snr_db) + ',' + detail::format_opt(r.ccr) + ',' +
           detail::format_opt(r.ccr_ci95) + ',' + detail::format_opt(r.ser) + ',' + std::to_string(r.frames) + ',' +
           std::to_string(r.layers) + ',' + std::to_string(r.ops.distances) + ',' + std::to_string(r.ops.exps) + ',' +
           std::to_string(r.ops.logs) + '\n';
  }
  return out;
}

inline std::string ops_to_csv(std::span<const OpsRow> rows) {
  std::string out = "classifier,dist_per_obs,dist_bound,exp_per_obs,exp_bound,log_per_obs,log_bound,within_bound\n";
  for (const auto& r : rows) {
    if (r.skipped) {
      out += r.classifier + ",,," + ",,,,skipped\n";
      continue;
    }
    out += r.classifier + ',' + std::to_string(r.per_observation.distances) + ',' +
           std::to_string(r.bound.distances) + ',' + std::to_string(r.per_observation.exps) + ',' +
           std::to_string(r.bound.exps) + ',' + std::to_string(r.per_observation.logs) + ',' +
           std::to_string(r.bound.logs) + ',' + (r.within_bound() ? "yes" : "no") + '\n';
  }
  return out;
}

}  // namespace mimo_mc
