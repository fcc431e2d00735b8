// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm ViT forward pass with token pruning hooks. At a scheduled layer the
// block runs attention, adds the residual, then drops patches using that same
// attention matrix before the MLP sub-block.

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "colln/attention.hpp"
#include "colln/image.hpp"
#include "colln/model_spec.hpp"
#include "colln/pruning.hpp"

namespace colln {

enum class TraceLevel { None, Decisions, Full };

TraceLevel parse_trace_level(std::string_view name);
std::string_view to_string(TraceLevel level);

struct LayerTrace {
  std::size_t layer = 0;
  std::size_t tokens_before = 0;  // including [CLS]
  std::size_t tokens_after = 0;
  std::optional<PruneDecision> decision;
  // Patch ids alive when the layer's scores were taken, aligned with
  // scores->values. Filled whenever scores are.
  std::vector<std::uint32_t> scored_patch_ids;
  std::optional<ImportanceScores> scores;
  std::optional<AttentionMatrix> attention;  // Full only
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  std::vector<float> logits;

  std::size_t argmax() const;
};

/// [CLS] + patch embeddings + positional embeddings.
TokenSequence embed(const Image& image, const ModelBundle& bundle);

/// Runs one transformer block. When `prune` is set the tokens are reduced
/// between the attention and MLP sub-blocks.
TokenSequence run_block(TokenSequence x, const ModelBundle& bundle, std::size_t layer,
                        const PruneConfig& cfg, bool prune, TraceLevel level, LayerTrace& trace);

/// Final norm over [CLS] followed by the linear head.
std::vector<float> classify(const TokenSequence& x, const ModelBundle& bundle);

/// Full forward. Token counts are always traced; `Decisions` adds prune
/// decisions and scores at scheduled layers; `Full` adds scores and the
/// attention matrix at every layer.
ForwardTrace forward(const Image& image, const ModelBundle& bundle, const PruneConfig& cfg,
                     TraceLevel level = TraceLevel::Decisions);

}  // namespace colln
