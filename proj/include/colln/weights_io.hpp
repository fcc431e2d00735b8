// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// VITW single-file weight container (see docs/weights-format.md):
//
//   "VITW" | u32 version (1) | u64 header_len | JSON header | zero pad to 64
//   | f32 blobs, contiguous, in header order | u32 CRC32 of the blob region
//
// All integers and floats are little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "colln/model_spec.hpp"

namespace colln {

inline constexpr std::uint32_t kVitwVersion = 1;
inline constexpr std::size_t kVitwAlignment = 64;

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle);

/// Full validation; throws WeightFormatError with the offending tensor name.
ModelBundle parse_bundle(std::span<const std::uint8_t> bytes);

/// Throws IoError with the path on file-system failures.
void write_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// Reads a whole file. Throws IoError.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes a whole file. Throws IoError.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace colln
