// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "colln/attention.hpp"
#include "colln/metrics.hpp"

namespace colln {

/// Keep ceil(rate * N) patches, rate in (0, 1].
struct KeepRate {
  double rate = 0.7;
};
/// Keep min(count, N) patches.
struct KeepCount {
  std::size_t count = 1;
};
/// Remove `count` patches at each scheduled layer (never fewer than one left).
struct PruneCount {
  std::size_t count = 0;
};
using KeepRule = std::variant<KeepRate, KeepCount, PruneCount>;

/// How a scheduled layer picks its survivors.
enum class Selector { ColLn, Cls, Random, Correcting };

std::string_view to_string(Selector s);
/// Accepts colln | cls | random | correcting. Throws ConfigError otherwise.
Selector parse_selector(std::string_view name);

struct PruneConfig {
  Selector selector = Selector::ColLn;
  double norm_order = 2.0;
  KeepRule keep_rule = KeepRate{0.7};
  double rescue_ratio = 0.8;  // Correcting only
  std::vector<std::size_t> schedule;
  std::uint64_t seed = 0;  // Random only
  HeadAggregation aggregation = HeadAggregation::Mean;

  /// Throws ConfigError on out-of-range values or a schedule that is not
  /// strictly increasing within [0, depth).
  void validate(std::size_t depth) const;
};

std::string describe(const KeepRule& rule);

/// "" -> none, "early" -> 0..5, "all" -> 0..depth-1, otherwise a comma list.
std::vector<std::size_t> parse_schedule(std::string_view text, std::size_t depth);
std::string format_schedule(std::span<const std::size_t> schedule);

/// Number of patches to keep out of `patches`, always within [1, patches].
std::size_t keep_count(const KeepRule& rule, std::size_t patches);

/// Indices of the k largest values, ties to the lower index, returned in
/// ascending index order. Throws ConfigError for k > values.size().
std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k);

struct PruneDecision {
  std::size_t layer = 0;
  std::vector<std::size_t> kept_positions;      // ascending, 1-based token positions
  std::vector<std::uint32_t> kept_patch_ids;    // original grid ids, same order
  ImportanceScores scores;
};

struct PruneResult {
  TokenSequence tokens;
  PruneDecision decision;
};

/// Keeps [CLS] plus the given 1-based positions, in the order given.
TokenSequence gather(const TokenSequence& x, std::span<const std::size_t> positions);

/// Keeps the `keep` highest-scoring patches (scores.values[k] scores position k + 1).
PruneResult prune_by_scores(const TokenSequence& x, ImportanceScores scores, std::size_t keep);

/// Col-Ln pruning: keep the `keep` patches with the largest column l_n norms.
PruneResult prune_colln(const TokenSequence& x, const AttentionMatrix& a, std::size_t keep,
                        double norm_order);

struct CorrectingSplit {
  std::size_t from_cls = 0;
  std::size_t from_colln = 0;
};

/// from_cls = floor(keep * (1 - rescue_ratio)), from_colln = keep - from_cls.
CorrectingSplit correcting_split(std::size_t keep, double rescue_ratio);

/// 1-based positions chosen by the correcting rule: the top from_cls patches by
/// [CLS] attention, then the top from_colln of the remaining patches by Col-Ln.
std::vector<std::size_t> correcting_positions(const ImportanceScores& cls,
                                              const ImportanceScores& colln, std::size_t keep,
                                              double rescue_ratio);

/// Col-Ln correcting: a [CLS]-ranked budget rescued by Col-Ln. The decision's
/// score snapshot holds the Col-Ln scores.
PruneResult prune_correcting(const TokenSequence& x, const AttentionMatrix& a, std::size_t keep,
                             double norm_order, double rescue_ratio);

/// Dispatches on cfg.selector at one scheduled layer.
PruneResult prune_layer(const TokenSequence& x, const AttentionMatrix& a, const PruneConfig& cfg,
                        std::size_t layer);

/// Scores a layer the way cfg.selector would (Col-Ln scores for Correcting).
ImportanceScores layer_scores(const AttentionMatrix& a, const PruneConfig& cfg,
                              std::size_t layer);

/// Seed used by the Random selector at `layer`.
std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer);

}  // namespace colln
