// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "colln/errors.hpp"

namespace colln {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<float> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) {
    throw ConfigError("matrix data length " + std::to_string(data.size()) + " does not match " +
                      std::to_string(r) + "x" + std::to_string(c));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

Matrix Matrix::row_vector(std::span<const float> values) {
  return Matrix(1, values.size(), std::vector<float>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ConfigError("matmul dimension mismatch: " + dims(a) + " * " + dims(b));
  }
  Matrix c(a.rows, b.cols);
  // i-k-j order: every c(i, j) still accumulates over k in increasing order,
  // but the inner loop is contiguous in both b and c.
  for (std::size_t i = 0; i < a.rows; ++i) {
    float* crow = c.data.data() + i * c.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const float aik = a(i, k);
      const float* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

Matrix linear(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  if (x.cols != weight.cols) {
    throw ConfigError("linear: input " + dims(x) + " incompatible with weight " + dims(weight));
  }
  Matrix y = matmul(x, transpose(weight));
  add_bias_rows(y, bias);
  return y;
}

void add_bias_rows(Matrix& m, const Matrix& bias) {
  if (bias.rows != 1 || bias.cols != m.cols) {
    throw ConfigError("bias " + dims(bias) + " incompatible with " + dims(m));
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] += bias.data[j];
  }
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ConfigError("elementwise add mismatch: " + dims(a) + " + " + dims(b));
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto in = m.row(i);
    auto dst = out.row(i);
    if (in.empty()) continue;
    const float mx = *std::max_element(in.begin(), in.end());
    float sum = 0.0f;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - mx);
      sum += dst[j];
    }
    const float inv = 1.0f / sum;
    for (float& v : dst) v *= inv;
  }
  return out;
}

std::vector<float> layer_norm(std::span<const float> x, std::span<const float> gamma,
                              std::span<const float> beta, float eps) {
  if (x.empty()) throw ConfigError("layer_norm: zero-length vector");
  if (gamma.size() != x.size() || beta.size() != x.size()) {
    throw ConfigError("layer_norm: gamma/beta length mismatch");
  }
  if (!(eps > 0.0f)) throw ConfigError("layer_norm: eps must be positive");

  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const double inv_std = 1.0 / std::sqrt(var + static_cast<double>(eps));

  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>((x[i] - mean) * inv_std) * gamma[i] + beta[i];
  }
  return out;
}

Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, float eps) {
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto normed = layer_norm(x.row(i), gamma.row(0), beta.row(0), eps);
    std::copy(normed.begin(), normed.end(), out.row(i).begin());
  }
  return out;
}

float gelu(float x) {
  constexpr float kInvSqrt2 = 0.70710678118654752440f;
  return 0.5f * x * (1.0f + std::erf(x * kInvSqrt2));
}

void gelu_inplace(Matrix& m) {
  for (float& v : m.data) v = gelu(v);
}

}  // namespace colln
