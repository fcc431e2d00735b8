// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/metrics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "colln/errors.hpp"

namespace colln {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::ColLn: return "colln";
    case Metric::Cls: return "cls";
    case Metric::Random: return "random";
    case Metric::RenyiEntropyOracle: return "renyi-entropy";
  }
  return "unknown";
}

namespace {

double column_power_sum(const AttentionMatrix& a, std::size_t j, double n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::pow(std::abs(static_cast<double>(a(i, j))), n);
  }
  return sum;
}

}  // namespace

double renyi_column_entropy(const AttentionMatrix& a, std::size_t j, double n) {
  if (!(n > 1.0)) throw ConfigError("Renyi entropy order must be > 1, got " + std::to_string(n));
  if (j < 1 || j >= a.size()) {
    throw ConfigError("patch index " + std::to_string(j) + " outside [1, " +
                      std::to_string(a.patch_count()) + "]");
  }
  // Evaluated in extended precision on its own loop; this is the reference the
  // Col-Ln ranking is checked against.
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::pow(static_cast<long double>(a(i, j)), static_cast<long double>(n));
  }
  if (sum == 0.0L) return std::numeric_limits<double>::infinity();
  return static_cast<double>(std::log(sum) / (1.0L - static_cast<long double>(n)));
}

ImportanceScores renyi_entropy_scores(const AttentionMatrix& a, double n) {
  ImportanceScores s{Metric::RenyiEntropyOracle, n, {}};
  s.values.reserve(a.patch_count());
  for (std::size_t j = 1; j < a.size(); ++j) s.values.push_back(renyi_column_entropy(a, j, n));
  return s;
}

ImportanceScores colln_scores(const AttentionMatrix& a, double n) {
  if (!(n >= 1.0)) throw ConfigError("norm order must be >= 1, got " + std::to_string(n));
  ImportanceScores s{Metric::ColLn, n, {}};
  s.values.reserve(a.patch_count());
  for (std::size_t j = 1; j < a.size(); ++j) {
    s.values.push_back(std::pow(column_power_sum(a, j, n), 1.0 / n));
  }
  return s;
}

ImportanceScores cls_scores(const AttentionMatrix& a) {
  if (a.size() < 2) throw ConfigError("[CLS] scores need at least one patch token");
  ImportanceScores s{Metric::Cls, 0.0, {}};
  s.values.reserve(a.patch_count());
  for (std::size_t j = 1; j < a.size(); ++j) s.values.push_back(a(0, j));
  return s;
}

ImportanceScores random_scores(std::size_t patch_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImportanceScores s{Metric::Random, 0.0, {}};
  s.values.reserve(patch_count);
  for (std::size_t k = 0; k < patch_count; ++k) {
    s.values.push_back(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  return s;
}

}  // namespace colln
