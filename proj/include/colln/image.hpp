// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "colln/model_spec.hpp"
#include "colln/tensor.hpp"

namespace colln {

/// RGB image, height x width x 3 interleaved, values in [0, 1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> rgb;

  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return rgb[(y * width + x) * 3 + c];
  }
};

/// Binary PPM (P6, maxval <= 255). Throws IngestionError on malformed input.
Image parse_ppm(std::span<const std::uint8_t> bytes);
Image read_ppm(const std::filesystem::path& path);
/// Quantizes to 8 bits.
std::vector<std::uint8_t> encode_ppm(const Image& image);

/// Flattened patches in row-major grid order, each laid out channel-major
/// (c, y, x) to match a [D, 3, p, p] convolution kernel.
struct PatchBatch {
  Matrix patches;  // N x 3p^2
  std::vector<std::uint32_t> patch_ids;
};

/// Applies (x - mean) / std per channel. Throws IngestionError when the image
/// is not spec.image_size square.
PatchBatch patchify(const Image& image, const ModelSpec& spec);

}  // namespace colln
