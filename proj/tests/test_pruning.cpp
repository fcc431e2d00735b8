// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "colln/errors.hpp"
#include "colln/pruning.hpp"
#include "doctest.h"

using namespace colln;

namespace {

TokenSequence make_tokens(std::size_t patches, std::size_t dim = 3) {
  TokenSequence t{Matrix(patches + 1, dim), {}};
  for (std::size_t i = 0; i <= patches; ++i)
    for (std::size_t c = 0; c < dim; ++c) t.embeddings(i, c) = float(i * 10 + c);
  for (std::size_t p = 0; p < patches; ++p) t.patch_ids.push_back(std::uint32_t(100 + p));
  return t;
}

AttentionMatrix random_stochastic(std::size_t tokens, std::mt19937& rng, float spread) {
  std::normal_distribution<float> d(0.0f, spread);
  Matrix m(tokens, tokens);
  for (auto& v : m.data) v = d(rng);
  return AttentionMatrix(softmax_rows(m));
}

// Row 0 is [CLS]; patch 1 wins on [CLS] attention, patch 2 on column mass.
AttentionMatrix golden() {
  return AttentionMatrix(Matrix(5, 5, {0.10f, 0.50f, 0.15f, 0.15f, 0.10f,  //
                                       0.05f, 0.01f, 0.60f, 0.20f, 0.14f,  //
                                       0.05f, 0.01f, 0.64f, 0.15f, 0.15f,  //
                                       0.05f, 0.01f, 0.30f, 0.54f, 0.10f,  //
                                       0.05f, 0.01f, 0.30f, 0.10f, 0.54f}));
}

// Indices of the k largest values by full sort, ties to the lower index.
std::vector<std::size_t> sorted_topk(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] > v[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Best subset of `pool` of size k by sum of `v`, by exhaustive enumeration.
std::vector<std::size_t> best_subset(const std::vector<std::size_t>& pool,
                                     const std::vector<double>& v, std::size_t k) {
  std::vector<bool> pick(pool.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  double best = -1.0;
  std::vector<std::size_t> out;
  do {
    double s = 0.0;
    std::vector<std::size_t> cur;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pick[i]) {
        s += v[pool[i]];
        cur.push_back(pool[i]);
      }
    }
    if (s > best) {
      best = s;
      out = cur;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace

TEST_CASE("topk") {
  const std::vector<double> v{0.1, 0.9, 0.5};
  CHECK(topk_indices(v, 2) == std::vector<std::size_t>{1, 2});
  CHECK(topk_indices(v, 0).empty());
  CHECK(topk_indices(v, 3) == std::vector<std::size_t>{0, 1, 2});
  const std::vector<double> ties{0.5, 0.5, 0.5, 0.2};
  CHECK(topk_indices(ties, 2) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(topk_indices(v, 4), ConfigError);

  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(0, 1);
  std::vector<double> big(100);
  for (auto& x : big) x = d(rng);
  CHECK(topk_indices(big, 30) == sorted_topk(big, 30));
}

TEST_CASE("keep count rules") {
  CHECK(keep_count(KeepRate{0.7}, 196) == 138);
  CHECK(keep_count(KeepRate{1.0}, 50) == 50);
  CHECK(keep_count(KeepRate{0.5}, 10) == 5);
  CHECK(keep_count(KeepRate{0.01}, 10) == 1);
  CHECK(keep_count(PruneCount{4}, 196) == 192);
  CHECK(keep_count(PruneCount{500}, 196) == 1);
  CHECK(keep_count(KeepCount{7}, 196) == 7);
  CHECK(keep_count(KeepCount{700}, 196) == 196);
  CHECK(keep_count(KeepCount{0}, 196) == 1);
  CHECK_THROWS_AS(keep_count(KeepRate{0.7}, 0), ConfigError);
}

TEST_CASE("schedule parsing") {
  CHECK(parse_schedule("", 12).empty());
  CHECK(parse_schedule("none", 12).empty());
  CHECK(parse_schedule("0,3,6", 12) == std::vector<std::size_t>{0, 3, 6});
  CHECK(parse_schedule(" 3, 6 ,9", 12) == std::vector<std::size_t>{3, 6, 9});
  CHECK(parse_schedule("early", 12) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(parse_schedule("all", 2) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(parse_schedule("1,,2", 12), ConfigError);
  CHECK_THROWS_AS(parse_schedule("x", 12), ConfigError);
  CHECK(format_schedule(std::vector<std::size_t>{3, 6, 9}) == "3,6,9");
}

TEST_CASE("config validation") {
  PruneConfig cfg;
  CHECK_NOTHROW(cfg.validate(12));
  cfg.schedule = {0, 12};
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  cfg.schedule = {3, 3};
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  cfg.schedule = {};
  cfg.keep_rule = KeepRate{0.0};
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  cfg.keep_rule = KeepRate{1.5};
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  cfg.keep_rule = KeepRate{0.7};
  cfg.norm_order = 0.5;
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  cfg.norm_order = 2.0;
  cfg.rescue_ratio = 1.2;
  CHECK_THROWS_AS(cfg.validate(12), ConfigError);
  CHECK(parse_selector("correcting") == Selector::Correcting);
  CHECK_THROWS_AS(parse_selector("entropy"), ConfigError);
}

TEST_CASE("column norm pruning") {
  SUBCASE("keeping everything is the identity") {
    std::mt19937 rng(3);
    const TokenSequence x = make_tokens(9);
    const PruneResult r = prune_colln(x, random_stochastic(10, rng, 2.0f), 9, 2.0);
    CHECK(r.tokens.embeddings == x.embeddings);
    CHECK(r.tokens.patch_ids == x.patch_ids);
  }
  SUBCASE("golden four-patch case") {
    const TokenSequence x = make_tokens(4);
    const PruneResult r = prune_colln(x, golden(), 1, 2.0);
    CHECK(r.decision.kept_positions == std::vector<std::size_t>{2});
    CHECK(r.decision.kept_patch_ids == std::vector<std::uint32_t>{101});
    CHECK(r.tokens.count() == 2);
    CHECK(r.tokens.embeddings(0, 0) == x.embeddings(0, 0));
    CHECK(r.tokens.embeddings(1, 0) == x.embeddings(2, 0));
    const PruneResult c = prune_by_scores(x, cls_scores(golden()), 1);
    CHECK(c.decision.kept_positions == std::vector<std::size_t>{1});
  }
  SUBCASE("kept set is the lowest-entropy set") {
    std::mt19937 rng(17);
    const TokenSequence x = make_tokens(8);
    const AttentionMatrix a = random_stochastic(9, rng, 2.0f);
    const PruneResult r = prune_colln(x, a, 3, 2.0);
    std::vector<double> neg_h;
    for (double h : renyi_entropy_scores(a, 2.0).values) neg_h.push_back(-h);
    std::vector<std::size_t> want = sorted_topk(neg_h, 3);
    for (auto& w : want) ++w;
    CHECK(r.decision.kept_positions == want);
  }
  SUBCASE("invalid requests") {
    std::mt19937 rng(3);
    const TokenSequence x = make_tokens(4);
    CHECK_THROWS_AS(prune_colln(x, random_stochastic(5, rng, 1.0f), 0, 2.0), ConfigError);
    CHECK_THROWS_AS(prune_colln(x, random_stochastic(5, rng, 1.0f), 5, 2.0), ConfigError);
    CHECK_THROWS_AS(prune_colln(x, random_stochastic(6, rng, 1.0f), 2, 2.0), ConfigError);
  }
}

TEST_CASE("correcting selection") {
  CHECK(correcting_split(100, 0.8).from_cls == 20);
  CHECK(correcting_split(100, 0.8).from_colln == 80);
  CHECK(correcting_split(7, 0.5).from_cls == 3);
  CHECK(correcting_split(7, 1.0).from_cls == 0);
  CHECK(correcting_split(7, 0.0).from_cls == 7);

  std::mt19937 rng(23);
  SUBCASE("degenerate ratios reduce to the single-metric selectors") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 4 + rng() % 40;
      const AttentionMatrix a = random_stochastic(n + 1, rng, 2.0f);
      const TokenSequence x = make_tokens(n);
      const std::size_t keep = 1 + rng() % n;
      CHECK(prune_correcting(x, a, keep, 2.0, 1.0).decision.kept_positions ==
            prune_colln(x, a, keep, 2.0).decision.kept_positions);
      CHECK(prune_correcting(x, a, keep, 2.0, 0.0).decision.kept_positions ==
            prune_by_scores(x, cls_scores(a), keep).decision.kept_positions);
    }
  }
  SUBCASE("two-stage brute force") {
    std::uniform_real_distribution<double> d(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      ImportanceScores cls{Metric::Cls, 0, std::vector<double>(12)};
      ImportanceScores col{Metric::ColLn, 2, std::vector<double>(12)};
      for (auto& v : cls.values) v = d(rng);
      for (auto& v : col.values) v = d(rng);
      const std::size_t keep = 2 + rng() % 9;
      const double ratio = 0.5;
      const CorrectingSplit split = correcting_split(keep, ratio);
      std::vector<std::size_t> all(12);
      std::iota(all.begin(), all.end(), 0);
      std::vector<std::size_t> first = best_subset(all, cls.values, split.from_cls);
      std::vector<std::size_t> rest;
      for (std::size_t i : all)
        if (std::find(first.begin(), first.end(), i) == first.end()) rest.push_back(i);
      std::vector<std::size_t> second = best_subset(rest, col.values, split.from_colln);
      std::set<std::size_t> want;
      for (std::size_t i : first) want.insert(i + 1);
      for (std::size_t i : second) want.insert(i + 1);
      const auto got = correcting_positions(cls, col, keep, ratio);
      CHECK(got.size() == keep);
      CHECK(std::set<std::size_t>(got.begin(), got.end()) == want);
    }
  }
}

TEST_CASE("top-K by column norm equals bottom-K by entropy on random matrices") {
  std::mt19937 rng(2026);
  std::size_t checked = 0;
  for (int trial = 0; trial < 240; ++trial) {
    const std::size_t n = 4 + rng() % 61;
    const AttentionMatrix a = random_stochastic(n + 1, rng, 0.5f + float(trial % 6));
    for (double order : {2.0, 3.0, 4.0}) {
      const auto s = colln_scores(a, order).values;
      const auto h = renyi_entropy_scores(a, order).values;
      // Skip near-ties: both sides are computed in different precisions.
      std::vector<double> sorted = s;
      std::sort(sorted.begin(), sorted.end());
      bool tie = false;
      for (std::size_t i = 1; i < sorted.size(); ++i) tie |= sorted[i] - sorted[i - 1] < 1e-9 * sorted[i];
      if (tie) continue;
      std::vector<double> neg_h;
      for (double v : h) neg_h.push_back(-v);
      for (std::size_t k = 1; k <= n; ++k) {
        REQUIRE(topk_indices(s, k) == sorted_topk(neg_h, k));
      }
      ++checked;
    }
  }
  CHECK(checked >= 600);
}

TEST_CASE("per-layer dispatch") {
  std::mt19937 rng(5);
  const TokenSequence x = make_tokens(10);
  const AttentionMatrix a = random_stochastic(11, rng, 2.0f);
  PruneConfig cfg;
  cfg.keep_rule = KeepCount{4};
  cfg.selector = Selector::Random;
  cfg.seed = 9;
  const PruneResult r1 = prune_layer(x, a, cfg, 3);
  const PruneResult r2 = prune_layer(x, a, cfg, 3);
  CHECK(r1.decision.layer == 3);
  CHECK(r1.decision.kept_positions == r2.decision.kept_positions);
  CHECK(r1.decision.kept_positions.size() == 4);
  CHECK(layer_seed(9, 3) != layer_seed(9, 4));
  cfg.selector = Selector::Cls;
  CHECK(prune_layer(x, a, cfg, 0).decision.kept_positions ==
        prune_by_scores(x, cls_scores(a), 4).decision.kept_positions);
}
