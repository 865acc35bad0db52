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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "mimo_mc/detection.hpp"
#include "test_support.hpp"

using namespace mimo_mc;
using mimo_mc::testing::exhaustive_nearest;
using mimo_mc::testing::random_channel;
using mimo_mc::testing::random_vector;

namespace {

const std::vector<ModulationType> kFive = {ModulationType::kPhi, ModulationType::kQpsk, ModulationType::kQam16,
                                           ModulationType::kQam64, ModulationType::kQam256};

FrameSpec qpsk_spec(double snr_db, int t_count, std::uint64_t seed) {
  FrameSpec spec;
  spec.n = 4;
  spec.observations = t_count;
  spec.hypotheses = {ModulationType::kQpsk};
  spec.snr_db = snr_db;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("LLRs from a QPSK distance table") {
  const auto& c = constellation(ModulationType::kQpsk);
  const std::vector<double> d = {0.0, 5.0, 7.0, 9.0};
  const LlrVector l = subspace_llrs(d, c, 2);
  REQUIRE(l.llrs.size() == 2);
  CHECK(l.layer == 2);
  for (int k = 0; k < 2; ++k) {
    double u = std::numeric_limits<double>::infinity();
    double v = u;
    for (int p = 0; p < 4; ++p) {
      double& slot = c.bit(p, k) == 0 ? u : v;
      slot = std::min(slot, d[static_cast<std::size_t>(p)]);
    }
    CHECK(l.llrs[static_cast<std::size_t>(k)] == u - v);
  }
  // Labels are Gray per axis: canonical order 00, 01, 10, 11.
  CHECK(l.llrs[0] == 0.0 - 7.0);
  CHECK(l.llrs[1] == 0.0 - 5.0);

  std::vector<double> shifted = d;
  for (auto& v : shifted) v += 3.25;
  CHECK(subspace_llrs(shifted, c).llrs == l.llrs);
}

TEST_CASE("LLR sign on a noiseless all-zeros label") {
  for (auto mt : {ModulationType::kQpsk, ModulationType::kQam16, ModulationType::kQam64, ModulationType::kQam256}) {
    const auto& c = constellation(mt);
    int zero = -1;
    for (int i = 0; i < c.size(); ++i) {
      if (c.label(i) == 0) zero = i;
    }
    REQUIRE(zero >= 0);
    std::vector<double> d;
    for (auto x : c.points()) d.push_back(std::norm(x - c.point(zero)));
    for (double v : subspace_llrs(d, c).llrs) CHECK(v < 0.0);
  }
}

TEST_CASE("LLR input validation") {
  const std::vector<double> d = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(subspace_llrs(d, constellation(ModulationType::kQpsk)), Error);
}

TEST_CASE("joint pipeline with one hypothesis and one observation") {
  const ComplexMatrix h = random_channel(4, 41);
  std::mt19937_64 rng(3);
  std::vector<Observation> obs(1);
  obs[0].y = random_vector(4, rng, 2.0);
  const std::vector<ModulationType> one = {ModulationType::kQam16};
  for (int layer = 0; layer < 4; ++layer) {
    const auto out = joint_classify_detect(ObservationStream(h, 0.1, obs), layer, one, ModulationType::kQam1024,
                                           ClassifierKind::kSubspaceLogMap);
    LayerDetector det(h, layer, ModulationType::kQam16, uniform_slicers(4, ModulationType::kQam1024),
                      Expansion::kSubspace);
    const auto d = det.distances(obs[0].y);
    const auto standalone = subspace_llrs(d, constellation(ModulationType::kQam16), layer);
    REQUIRE(out.llrs.size() == 1);
    CHECK(out.llrs[0].llrs == standalone.llrs);
    CHECK(out.llrs[0].layer == layer);
    CHECK(out.hard_index[0] == argmin_index(d));
  }
}

TEST_CASE("QPSK at 20 dB is classified and detected") {
  // QPSK on the layer of interest, the other layers hop over the set.
  FrameSpec spec = qpsk_spec(20.0, 100, 42);
  spec.hypotheses = kFive;
  int hits = 0;
  int total = 0;
  int winners = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const int layer = static_cast<int>(i % 4);
    spec.fixed_layer = std::pair{layer, ModulationType::kQpsk};
    const Frame f = draw_frame(spec, i);
    const auto out =
        joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kSubspaceLogMap);
    if (out.winner == ModulationType::kQpsk) ++winners;
    for (std::size_t t = 0; t < f.observations.size(); ++t) {
      ++total;
      if (out.winner == ModulationType::kQpsk &&
          out.hard_index[t] == f.observations[t].symbol_index[static_cast<std::size_t>(layer)]) {
        ++hits;
      }
    }
  }
  CHECK(winners == 100);
  CHECK(static_cast<double>(hits) / total >= 0.99);
}

TEST_CASE("distance cache contract") {
  const FrameSpec spec = [] {
    FrameSpec s;
    s.n = 3;
    s.observations = 20;
    s.hypotheses = kFive;
    s.snr_db = 15.0;
    s.seed = 43;
    return s;
  }();
  const Frame f = draw_frame(spec, 0);
  const int layer = 1;

  SECTION("cached values are the classification-time values, bit for bit") {
    const auto out = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kSubspaceLogMap);
    LayerMetric metric(decompose_for_layer(f.channel.h, layer), Expansion::kSubspace,
                       uniform_slicers(3, ModulationType::kQam1024));
    for (int t = 0; t < 20; ++t) {
      metric.load(f.observations[static_cast<std::size_t>(t)].y);
      for (int j = 0; j < 5; ++j) {
        const auto& c = constellation(kFive[static_cast<std::size_t>(j)]);
        std::vector<double> d(static_cast<std::size_t>(c.size()));
        metric.distances(c, d);
        const auto cached = out.cache.distances(t, j);
        REQUIRE(cached.size() == d.size());
        for (std::size_t k = 0; k < d.size(); ++k) CHECK(cached[k] == d[k]);
        CHECK(out.cache.slicer_outputs(t, j).size() == d.size() * 2);
      }
    }
    CHECK(out.cache.stored_distances() == 20u * (1 + 4 + 16 + 64 + 256));
  }

  SECTION("soft-output reads touch only written slots") {
    const auto out = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kLordMaxLogMap);
    CHECK(out.cache.coherent());
    for (int t = 0; t < 20; ++t) {
      for (int j = 0; j < 5; ++j) {
        CHECK(out.cache.written(t, j));
        CHECK(out.cache.was_read(t, j) == (j == out.winner_index));
      }
    }
  }

  SECTION("reading an unwritten slot is a cache miss") {
    DistanceCache cache(2, kFive, 2);
    try {
      cache.distances(1, 3);
      FAIL("expected CacheMiss");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kCacheMiss);
    }
    CHECK_THROWS_AS(cache.hard_index(2, 0), Error);
  }

  SECTION("streaming mode gives the same LLRs and decisions") {
    const auto full = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024,
                                            ClassifierKind::kSubspaceMaxLogMap, CacheMode::kFull);
    const auto lean = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024,
                                            ClassifierKind::kSubspaceMaxLogMap, CacheMode::kStreaming);
    CHECK(full.winner_index == lean.winner_index);
    CHECK(full.hard_index == lean.hard_index);
    for (std::size_t t = 0; t < full.llrs.size(); ++t) CHECK(full.llrs[t].llrs == lean.llrs[t].llrs);
    CHECK(lean.cache.stored_distances() == 0u);
    CHECK_THROWS_AS(lean.cache.distances(0, 0), Error);
  }
}

TEST_CASE("MT-aware detection") {
  SECTION("agrees with the joint pipeline when slicing matches the true MTs") {
    FrameSpec spec = qpsk_spec(12.0, 30, 44);
    const std::vector<ModulationType> hyps = {ModulationType::kQpsk, ModulationType::kQam16};
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Frame f = draw_frame(spec, i);
      const int layer = static_cast<int>(i % 4);
      const auto out = joint_classify_detect(f, layer, hyps, ModulationType::kQpsk, ClassifierKind::kSubspaceLogMap);
      if (out.winner != ModulationType::kQpsk) continue;
      for (std::size_t t = 0; t < f.observations.size(); ++t) {
        const auto aware = mt_aware_detect(f.channel.h, f.observations[t].y, layer, f.mts, Expansion::kSubspace);
        CHECK(aware.llr.llrs == out.llrs[t].llrs);
        CHECK(aware.hard_index == out.hard_index[t]);
      }
    }
  }

  SECTION("two layers: subspace equals LORD") {
    std::mt19937_64 rng(45);
    const std::vector<ModulationType> mts = {ModulationType::kQam64, ModulationType::kQam16};
    const ComplexMatrix h = random_channel(2, 46);
    for (int trial = 0; trial < 50; ++trial) {
      const ComplexVector y = random_vector(2, rng, 2.0);
      for (int layer = 0; layer < 2; ++layer) {
        const auto a = mt_aware_detect(h, y, layer, mts, Expansion::kSubspace);
        const auto b = mt_aware_detect(h, y, layer, mts, Expansion::kLord);
        CHECK(a.llr.llrs == b.llr.llrs);
        CHECK(a.hard_index == b.hard_index);
      }
    }
  }

  SECTION("4x4 case against a dense-multiply oracle") {
    std::mt19937_64 rng(47);
    const std::vector<ModulationType> mts = {ModulationType::kQam16, ModulationType::kQpsk, ModulationType::kQam64,
                                             ModulationType::kPhi};
    const ComplexMatrix h = random_channel(4, 48);
    for (int trial = 0; trial < 10; ++trial) {
      const ComplexVector y = random_vector(4, rng, 2.0);
      const int layer = trial % 3;
      const auto got = mt_aware_detect(h, y, layer, mts, Expansion::kSubspace);
      const auto d = decompose_for_layer(h, layer);
      const ComplexVector yt = d.w.adjoint() * y;
      const auto& c = constellation(mts[static_cast<std::size_t>(layer)]);
      std::vector<double> dist;
      for (auto x2 : c.points()) {
        ComplexVector x(4);
        x(3) = x2;
        for (int i = 0; i < 3; ++i) {
          const auto& slicer = constellation(mts[static_cast<std::size_t>(permuted_source(i, layer, 4))]);
          x(i) = slicer.point(exhaustive_nearest(slicer, (yt(i) - d.r(i, 3) * x2) / d.r(i, i).real()));
        }
        dist.push_back((yt - d.r * x).squaredNorm());
      }
      const auto oracle = subspace_llrs(dist, c, layer);
      REQUIRE(got.llr.llrs.size() == oracle.llrs.size());
      for (std::size_t k = 0; k < oracle.llrs.size(); ++k) {
        CHECK(std::abs(got.llr.llrs[k] - oracle.llrs[k]) <= 1e-9 * std::max(1.0, std::abs(oracle.llrs[k])));
      }
      CHECK(got.hard_index == argmin_index(dist));
    }
  }
}

TEST_CASE("LLR signs predict the transmitted bits at 20 dB") {
  FrameSpec spec;
  spec.n = 4;
  spec.observations = 50;
  spec.hypotheses = {ModulationType::kQpsk, ModulationType::kQam16};
  spec.snr_db = 20.0;
  spec.seed = 49;
  int bits = 0;
  int errors = 0;
  for (std::uint64_t i = 0; bits < 10000; ++i) {
    const Frame f = draw_frame(spec, i);
    const int layer = static_cast<int>(i % 4);
    const auto mt = f.mts[static_cast<std::size_t>(layer)];
    const auto& c = constellation(mt);
    for (const auto& obs : f.observations) {
      const auto det = mt_aware_detect(f.channel.h, obs.y, layer, f.mts, Expansion::kSubspace);
      const int sent = obs.symbol_index[static_cast<std::size_t>(layer)];
      for (int k = 0; k < c.bits_per_symbol(); ++k) {
        ++bits;
        const int decided = det.llr.llrs[static_cast<std::size_t>(k)] < 0.0 ? 0 : 1;
        if (decided != c.bit(sent, k)) ++errors;
      }
    }
  }
  CHECK(static_cast<double>(errors) / bits < 0.01);
}

TEST_CASE("hard decisions from cached distances equal a fresh search") {
  FrameSpec spec;
  spec.n = 4;
  spec.observations = 10;
  spec.hypotheses = kFive;
  spec.snr_db = 18.0;
  spec.seed = 50;
  const auto& dense = constellation(ModulationType::kQam1024);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Frame f = draw_frame(spec, i);
    const int layer = static_cast<int>(i % 4);
    const auto out = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kSubspaceLogMap);
    const auto d = decompose_for_layer(f.channel.h, layer);
    const auto& c = constellation(out.winner);
    for (std::size_t t = 0; t < f.observations.size(); ++t) {
      const auto split = transform_observation(f.observations[t].y, d);
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < c.size(); ++k) {
        const double v = subspace_distance(split.upper, split.last, d, c.point(k), dense, 1.0);
        if (v < best_d) {
          best_d = v;
          best = k;
        }
      }
      CHECK(out.hard_index[t] == best);
    }
  }
}

TEST_CASE("per-layer pipelines are independent") {
  FrameSpec spec;
  spec.n = 4;
  spec.observations = 15;
  spec.hypotheses = kFive;
  spec.snr_db = 10.0;
  spec.seed = 51;
  const Frame f = draw_frame(spec, 3);
  std::vector<JointDetection> forward;
  for (int layer = 0; layer < 4; ++layer) {
    forward.push_back(joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kSubspaceLogMap));
  }
  for (int layer = 3; layer >= 0; --layer) {
    const auto again = joint_classify_detect(f, layer, kFive, ModulationType::kQam1024, ClassifierKind::kSubspaceLogMap);
    const auto& ref = forward[static_cast<std::size_t>(layer)];
    CHECK(again.score.scores == ref.score.scores);
    CHECK(again.hard_index == ref.hard_index);
  }
}
