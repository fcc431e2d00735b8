// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "colln/errors.hpp"

namespace colln {

namespace {

std::vector<std::uint8_t> encode_pgm(const std::vector<std::uint8_t>& cells, std::size_t grid,
                                     std::size_t upscale) {
  const std::size_t side = grid * upscale;
  const std::string header = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + side * side);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) out.push_back(cells[(y / upscale) * grid + x / upscale]);
  return out;
}

void check_grid(std::size_t grid, std::size_t upscale) {
  if (grid == 0 || upscale == 0) throw ConfigError("heatmap grid and upscale must be positive");
}

}  // namespace

std::vector<std::uint8_t> render_heatmap(const ImportanceScores& scores,
                                         std::span<const std::uint32_t> patch_ids,
                                         const HeatmapSpec& spec) {
  check_grid(spec.grid, spec.upscale);
  if (patch_ids.size() != scores.size()) {
    throw ConfigError("heatmap: " + std::to_string(scores.size()) + " scores for " +
                      std::to_string(patch_ids.size()) + " patch ids");
  }
  const std::size_t cells_n = spec.grid * spec.grid;
  if (patch_ids.size() > cells_n) throw ConfigError("heatmap: more patches than grid cells");
  for (std::uint32_t id : patch_ids) {
    if (id >= cells_n) {
      throw ConfigError("heatmap: patch id " + std::to_string(id) + " outside " +
                        std::to_string(spec.grid) + "x" + std::to_string(spec.grid) + " grid");
    }
  }

  std::vector<std::uint8_t> cells(cells_n, 0);
  if (!scores.values.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(scores.values.begin(), scores.values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const bool invert = scores.metric == Metric::RenyiEntropyOracle;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      std::uint8_t v = 128;
      if (hi > lo) {
        double t = (scores.values[k] - lo) / (hi - lo);
        if (invert) t = 1.0 - t;
        v = static_cast<std::uint8_t>(std::lround(t * 255.0));
      }
      cells[patch_ids[k]] = v;
    }
  }
  return encode_pgm(cells, spec.grid, spec.upscale);
}

std::vector<std::vector<std::uint8_t>> render_kept_mask(std::span<const PruneDecision> decisions,
                                                        std::size_t grid, std::size_t upscale) {
  check_grid(grid, upscale);
  std::vector<std::vector<std::uint8_t>> out;
  std::unordered_set<std::uint32_t> previous;
  for (std::size_t d = 0; d < decisions.size(); ++d) {
    std::vector<std::uint8_t> cells(grid * grid, 0);
    std::unordered_set<std::uint32_t> current;
    for (std::uint32_t id : decisions[d].kept_patch_ids) {
      if (id >= grid * grid) {
        throw InternalError("kept patch id " + std::to_string(id) + " outside the patch grid");
      }
      if (d > 0 && !previous.contains(id)) {
        throw InternalError("layer " + std::to_string(decisions[d].layer) + " keeps patch " +
                            std::to_string(id) + " that an earlier layer pruned");
      }
      if (!current.insert(id).second) throw InternalError("duplicate kept patch id");
      cells[id] = 255;
    }
    out.push_back(encode_pgm(cells, grid, upscale));
    previous = std::move(current);
  }
  return out;
}

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  std::string head(bytes.begin(), bytes.begin() + static_cast<long>(std::min<std::size_t>(bytes.size(), 64)));
  GrayImage img;
  unsigned maxval = 0;
  int consumed = 0;
  if (std::sscanf(head.c_str(), "P5 %zu %zu %u%n", &img.width, &img.height, &maxval, &consumed) != 3 ||
      maxval != 255) {
    throw ConfigError("not an 8-bit P5 image");
  }
  const std::size_t start = static_cast<std::size_t>(consumed) + 1;
  if (bytes.size() != start + img.width * img.height) throw ConfigError("P5 pixel count mismatch");
  img.pixels.assign(bytes.begin() + static_cast<long>(start), bytes.end());
  return img;
}

std::string scores_csv(const ForwardTrace& trace) {
  std::string out = "layer,patch_id,score,kept\n";
  char line[96];
  for (const auto& l : trace.layers) {
    if (!l.scores) continue;
    std::unordered_set<std::uint32_t> kept;
    if (l.decision) kept.insert(l.decision->kept_patch_ids.begin(), l.decision->kept_patch_ids.end());
    for (std::size_t k = 0; k < l.scores->size(); ++k) {
      const std::uint32_t id = l.scored_patch_ids[k];
      const bool survived = !l.decision || kept.contains(id);
      std::snprintf(line, sizeof line, "%zu,%u,%.9g,%d\n", l.layer, id, l.scores->values[k],
                    survived ? 1 : 0);
      out += line;
    }
  }
  return out;
}

}  // namespace colln
