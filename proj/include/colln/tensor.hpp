// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense fp32 kernels used by the ViT forward pass. Everything here is a pure
// function of its inputs and runs single-threaded, so results are bitwise
// reproducible on a given platform.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace colln {

/// Row-major fp32 matrix. Vectors are stored as 1 x n.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), data(r * c, fill) {}
  /// Throws ConfigError if values.size() != r * c.
  Matrix(std::size_t r, std::size_t c, std::vector<float> values);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const float> values);

  float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const float> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// c = a * b with fp32 accumulation in k order.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// y = x * w^T + bias, with w laid out [out x in] and bias 1 x out.
Matrix linear(const Matrix& x, const Matrix& weight, const Matrix& bias);

/// Adds a 1 x cols bias to every row, in place.
void add_bias_rows(Matrix& m, const Matrix& bias);

/// Elementwise a += b.
void add_inplace(Matrix& a, const Matrix& b);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

std::vector<float> layer_norm(std::span<const float> x, std::span<const float> gamma,
                              std::span<const float> beta, float eps);

/// layer_norm applied independently to each row.
Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, float eps);

/// Exact-erf GELU: x * Phi(x).
float gelu(float x);

void gelu_inplace(Matrix& m);

}  // namespace colln
