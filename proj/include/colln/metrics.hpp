// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-patch importance scores read off an attention matrix.
//
// Col-Ln scores patch j by the l_n norm of the attention column it receives,
// including the [CLS] row. For n > 1 the Renyi entropy of that column is
// H_n = n / (1 - n) * ln ||A[:, j]||_n, a strictly decreasing function of the
// norm, so "keep the K largest norms" selects exactly the K lowest-entropy
// columns. The entropy itself is only computed for verification.

#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "colln/attention.hpp"

namespace colln {

enum class Metric { ColLn, Cls, Random, RenyiEntropyOracle };

std::string_view to_string(Metric m);

/// values[k] scores patch position k + 1. Larger is more important for every
/// metric except RenyiEntropyOracle, where lower entropy is more important.
struct ImportanceScores {
  Metric metric = Metric::ColLn;
  double norm_order = 0.0;  // ColLn and the entropy oracle only
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// (1 / (1 - n)) * ln(sum_i A[i, j]^n) over all rows of column j, natural log.
/// Returns +inf for an all-zero column (see is_degenerate_entropy). Throws
/// ConfigError for n <= 1 or j outside [1, N].
double renyi_column_entropy(const AttentionMatrix& a, std::size_t j, double n);

inline bool is_degenerate_entropy(double h) { return h == std::numeric_limits<double>::infinity(); }

ImportanceScores renyi_entropy_scores(const AttentionMatrix& a, double n);

/// S_j = (sum_{i=0..N} |A[i, j]|^n)^(1/n) for j = 1..N. Throws ConfigError for n < 1.
ImportanceScores colln_scores(const AttentionMatrix& a, double n);

/// Row 0, columns 1..N. Throws ConfigError when the matrix has no patches.
ImportanceScores cls_scores(const AttentionMatrix& a);

/// Uniform [0, 1) draws from a seeded 64-bit Mersenne twister (53-bit mantissa
/// construction, so values do not depend on the standard library's distributions).
ImportanceScores random_scores(std::size_t patch_count, std::uint64_t seed);

}  // namespace colln
