// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/attention.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "colln/errors.hpp"

namespace colln {

void TokenSequence::check() const {
  if (embeddings.rows != patch_ids.size() + 1) {
    throw InternalError("token sequence has " + std::to_string(embeddings.rows) + " rows but " +
                        std::to_string(patch_ids.size()) + " patch ids");
  }
  std::unordered_set<std::uint32_t> seen(patch_ids.begin(), patch_ids.end());
  if (seen.size() != patch_ids.size()) throw InternalError("duplicate patch id in token sequence");
}

AttentionMatrix::AttentionMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows == 0 || m_.rows != m_.cols) {
    throw ConfigError("attention matrix must be square and non-empty, got " +
                      std::to_string(m_.rows) + "x" + std::to_string(m_.cols));
  }
  for (float v : m_.data) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw ConfigError("attention matrix entries must be finite and non-negative");
    }
  }
}

bool AttentionMatrix::is_row_stochastic(double tol) const {
  for (std::size_t i = 0; i < m_.rows; ++i) {
    double s = 0.0;
    for (float v : m_.row(i)) s += v;
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

namespace {

void check_heads(std::span<const Matrix> per_head) {
  if (per_head.empty()) throw ConfigError("head aggregation over an empty list");
  for (const Matrix& h : per_head) {
    if (h.rows != per_head[0].rows || h.cols != per_head[0].cols) {
      throw ConfigError("head aggregation over matrices of different sizes");
    }
  }
}

void check_weights(const AttentionWeights& w, std::size_t dim) {
  auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows != r || m.cols != c) {
      throw WeightFormatError(WeightErrorKind::ShapeMismatch,
                              std::string(name) + " is " + std::to_string(m.rows) + "x" +
                                  std::to_string(m.cols) + ", expected " + std::to_string(r) +
                                  "x" + std::to_string(c));
    }
  };
  expect(w.qkv_w, 3 * dim, dim, "attn.qkv.w");
  expect(w.qkv_b, 1, 3 * dim, "attn.qkv.b");
  expect(w.proj_w, dim, dim, "attn.proj.w");
  expect(w.proj_b, 1, dim, "attn.proj.b");
}

// Copies columns [offset, offset + width) of m.
Matrix slice_cols(const Matrix& m, std::size_t offset, std::size_t width) {
  Matrix out(m.rows, width);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto src = m.row(i).subspan(offset, width);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

struct HeadState {
  Matrix qkv;
  std::vector<Matrix> probs;
};

HeadState attend(const Matrix& x, const AttentionWeights& w, std::size_t heads) {
  const std::size_t dim = x.cols;
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("embedding dim " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  check_weights(w, dim);
  const std::size_t head_dim = dim / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  HeadState st{linear(x, w.qkv_w, w.qkv_b), {}};
  st.probs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix q = slice_cols(st.qkv, h * head_dim, head_dim);
    Matrix k = slice_cols(st.qkv, dim + h * head_dim, head_dim);
    Matrix logits = matmul(q, transpose(k));
    for (float& v : logits.data) v *= scale;
    st.probs.push_back(softmax_rows(logits));
  }
  return st;
}

}  // namespace

AttentionMatrix head_average(std::span<const Matrix> per_head) {
  check_heads(per_head);
  Matrix sum = per_head[0];
  for (std::size_t h = 1; h < per_head.size(); ++h) add_inplace(sum, per_head[h]);
  const float inv = 1.0f / static_cast<float>(per_head.size());
  for (float& v : sum.data) v *= inv;
  return AttentionMatrix(std::move(sum));
}

AttentionMatrix head_max(std::span<const Matrix> per_head) {
  check_heads(per_head);
  Matrix out = per_head[0];
  for (std::size_t h = 1; h < per_head.size(); ++h) {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = std::max(out.data[i], per_head[h].data[i]);
    }
  }
  return AttentionMatrix(std::move(out));
}

std::vector<Matrix> per_head_attention(const Matrix& x, const AttentionWeights& w,
                                       std::size_t heads) {
  return attend(x, w, heads).probs;
}

AttentionOutput mhsa_forward(const Matrix& x, const AttentionWeights& w, std::size_t heads,
                             HeadAggregation aggregation) {
  HeadState st = attend(x, w, heads);
  const std::size_t dim = x.cols;
  const std::size_t head_dim = dim / heads;

  Matrix context(x.rows, dim);
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix v = slice_cols(st.qkv, 2 * dim + h * head_dim, head_dim);
    Matrix out_h = matmul(st.probs[h], v);
    for (std::size_t i = 0; i < x.rows; ++i) {
      auto src = out_h.row(i);
      std::copy(src.begin(), src.end(), context.row(i).begin() + static_cast<long>(h * head_dim));
    }
  }

  AttentionMatrix attn = aggregation == HeadAggregation::Mean ? head_average(st.probs)
                                                              : head_max(st.probs);
  return {linear(context, w.proj_w, w.proj_b), std::move(attn)};
}

}  // namespace colln
