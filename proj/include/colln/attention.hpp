// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colln/tensor.hpp"

namespace colln {

/// Ordered token embeddings; row 0 is always [CLS]. patch_ids[k] is the
/// original grid index of embedding row k + 1.
struct TokenSequence {
  Matrix embeddings;
  std::vector<std::uint32_t> patch_ids;

  std::size_t count() const { return embeddings.rows; }
  std::size_t patch_count() const { return patch_ids.size(); }
  std::size_t dim() const { return embeddings.cols; }

  /// Throws InternalError when rows != patch_ids + 1 or ids repeat.
  void check() const;
};

/// Square attention matrix over [CLS] + patches. Column j > 0 is the attention
/// patch j receives; row 0 is the [CLS] query. Row-stochasticity is expected
/// from softmax outputs but not enforced, so metric code can be fed synthetic
/// matrices.
class AttentionMatrix {
 public:
  AttentionMatrix() = default;
  /// Throws ConfigError unless m is square, non-empty and entries are finite and >= 0.
  explicit AttentionMatrix(Matrix m);

  std::size_t size() const { return m_.rows; }
  std::size_t patch_count() const { return m_.rows == 0 ? 0 : m_.rows - 1; }
  float operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

  bool is_row_stochastic(double tol) const;

 private:
  Matrix m_;
};

enum class HeadAggregation { Mean, Max };

/// Weights of one attention sub-block; qkv_w is [3D x D] with Q, K, V stacked.
struct AttentionWeights {
  Matrix qkv_w;
  Matrix qkv_b;
  Matrix proj_w;
  Matrix proj_b;
};

struct AttentionOutput {
  Matrix tokens;  // post output projection, before the residual add
  AttentionMatrix attention;
};

/// Elementwise mean over per-head matrices. Throws ConfigError on an empty
/// list or mismatched sizes.
AttentionMatrix head_average(std::span<const Matrix> per_head);

/// Elementwise max over heads. Not row-stochastic; ablation only.
AttentionMatrix head_max(std::span<const Matrix> per_head);

/// Multi-head self-attention over already-normalized tokens x ([T x D]).
/// Scaling is 1/sqrt(D / heads).
AttentionOutput mhsa_forward(const Matrix& x, const AttentionWeights& w, std::size_t heads,
                             HeadAggregation aggregation = HeadAggregation::Mean);

/// Per-head attention probabilities (softmax(Q_h K_h^T / sqrt(d_k))).
std::vector<Matrix> per_head_attention(const Matrix& x, const AttentionWeights& w,
                                       std::size_t heads);

}  // namespace colln
