// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic multiply-accumulate counts for a (possibly pruned) ViT forward.
// Reported "GFLOPs" follow the ViT pruning literature and are giga-MACs.
// LayerNorm, softmax and GELU are not counted.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colln/model_spec.hpp"
#include "colln/pruning.hpp"

namespace colln {

struct BlockMacs {
  std::uint64_t attn = 0;  // 4*T*D^2 (qkv + proj) + 2*T^2*D (QK^T and AV)
  std::uint64_t mlp = 0;   // 2*m*T*D^2
};

BlockMacs block_macs(std::uint64_t tokens, std::uint64_t dim, std::uint64_t mlp_ratio);

struct LayerMacs {
  std::size_t layer = 0;
  std::size_t tokens_in = 0;   // including [CLS]; attention runs at this count
  std::size_t tokens_out = 0;  // MLP runs at this count
  std::uint64_t attn = 0;
  std::uint64_t mlp = 0;
};

struct FlopsReport {
  std::vector<LayerMacs> layers;
  std::uint64_t patch_embed = 0;
  std::uint64_t head = 0;
  std::uint64_t total = 0;

  double gmacs() const { return static_cast<double>(total) * 1e-9; }
};

/// Simulates the token timeline through cfg.schedule using keep_count.
FlopsReport schedule_macs(const ModelSpec& spec, const PruneConfig& cfg);

/// Aligned human-readable table.
std::string format_report_text(const FlopsReport& r);
/// One key=value per line.
std::string format_report_kv(const FlopsReport& r);

}  // namespace colln
