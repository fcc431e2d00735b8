// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommands of the `colln` tool, callable in-process so tests can drive
// them without spawning the binary.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colln/attention.hpp"
#include "colln/model.hpp"
#include "colln/pruning.hpp"

namespace colln::cli {

inline constexpr const char* kEngineVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2, kIoError = 3 };

/// Entry point shared by the binary and the tests. Maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// ---- verify ----------------------------------------------------------------

using TopkFn = std::function<std::vector<std::size_t>(std::span<const double>, std::size_t)>;

struct VerifyOptions {
  std::size_t trials = 200;
  std::size_t min_n = 4;
  std::size_t max_n = 64;
  std::vector<double> norms{2.0, 3.0, 4.0};
  std::uint64_t seed = 0;
  std::size_t correcting_cases = 100;
  std::filesystem::path dump_dir = ".";
  TopkFn topk = [](std::span<const double> v, std::size_t k) { return topk_indices(v, k); };
};

struct PropertyResult {
  enum class Status { Pass, Fail, Skip };
  std::string name;
  Status status = Status::Pass;
  std::string detail;
};

struct VerifyReport {
  std::vector<PropertyResult> results;
  bool ok() const;
};

VerifyReport run_verify(const VerifyOptions& opts);
int cmd_verify(const VerifyOptions& opts, std::ostream& out);

/// Random row-stochastic (N+1)x(N+1) attention built from softmaxed logits,
/// resampled until the column l_n norms are separated by a relative gap of at
/// least 1e-9 for every order in `norms`.
AttentionMatrix random_tie_free_attention(std::size_t patches, std::span<const double> norms,
                                          std::uint64_t& state);

// ---- flops -----------------------------------------------------------------

struct FlopsOptions {
  std::string model = "vit-s16";
  std::string schedule;
  KeepRule keep_rule = KeepRate{0.7};
};

int cmd_flops(const FlopsOptions& opts, std::ostream& out);

// ---- prune -----------------------------------------------------------------

struct PruneOptions {
  std::filesystem::path weights;
  std::filesystem::path image;
  std::filesystem::path out_dir = "colln_out";
  std::string schedule;
  PruneConfig config;
  TraceLevel trace = TraceLevel::Decisions;
  bool heatmaps = false;
  std::size_t upscale = 8;
};

int cmd_prune(const PruneOptions& opts, std::ostream& out);

/// Re-runs a prune manifest; fails with an I/O error if the recorded input
/// hashes no longer match. Writes to `out_dir` when given, else the recorded one.
int cmd_replay(const std::filesystem::path& manifest,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& out);

/// Hex CRC32 of a file's contents.
std::string file_crc32(const std::filesystem::path& path);

// ---- compare ---------------------------------------------------------------

struct CompareOptions {
  std::filesystem::path weights;
  std::filesystem::path image_dir;
  std::filesystem::path out = "compare.csv";
  std::optional<std::filesystem::path> labels;  // CSV: image,label
  std::vector<Selector> metrics{Selector::ColLn, Selector::Cls, Selector::Random};
  std::vector<std::string> schedules{"0,3,6", "3,6,9"};
  PruneConfig base;  // selector and schedule are overridden per run
  std::size_t threads = 0;  // 0 = COLLN_THREADS or hardware concurrency
};

int cmd_compare(const CompareOptions& opts, std::ostream& out);

// ---- fixtures --------------------------------------------------------------

inline constexpr std::uint64_t kTinySeed = 20260416;

/// Writes tiny.vitw and sample.ppm (a deterministic 12x12 pattern) to dir.
int cmd_tiny_fixture(const std::filesystem::path& dir, std::ostream& out);

Image tiny_sample_image(std::uint64_t variant = 0);

}  // namespace colln::cli
