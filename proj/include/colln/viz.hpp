// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "colln/metrics.hpp"
#include "colln/model.hpp"
#include "colln/pruning.hpp"

namespace colln {

struct HeatmapSpec {
  std::size_t grid = 14;
  std::size_t upscale = 1;  // nearest-neighbour block size per patch
};

/// Grayscale P5 heatmap of per-patch scores laid out on the patch grid.
/// patch_ids[k] is the grid cell of scores.values[k]. Live patches are min-max
/// scaled to [0, 255] (a constant map renders as 128); cells with no score are
/// 0. For the entropy oracle lower is brighter. Throws ConfigError on an id
/// outside the grid or a length mismatch.
std::vector<std::uint8_t> render_heatmap(const ImportanceScores& scores,
                                         std::span<const std::uint32_t> patch_ids,
                                         const HeatmapSpec& spec);

/// One P5 mask per decision: kept original patch ids white, the rest black.
/// Throws InternalError when a decision keeps a patch an earlier one dropped.
std::vector<std::vector<std::uint8_t>> render_kept_mask(std::span<const PruneDecision> decisions,
                                                        std::size_t grid, std::size_t upscale = 1);

/// Pixel grid of a P5 image (header stripped). Throws ConfigError if malformed.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);

/// CSV with header `layer,patch_id,score,kept`, one row per scored patch per
/// layer. `kept` is 1 when the patch survived that layer.
std::string scores_csv(const ForwardTrace& trace);

}  // namespace colln
