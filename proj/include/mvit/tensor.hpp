/* Copyright 2026 The mvit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvit {

/// Extent of a rank-4 channel-first tensor.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t elements() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense float32 tensor in N-C-H-W row-major order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* ptr() { return data_.data(); }
  const float* ptr() const { return data_.data(); }

  float* plane(int n, int c) {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  const float* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }

  float& at(int n, int c, int h, int w) {
    return *(plane(n, c) + static_cast<std::size_t>(h) * shape_.w + w);
  }
  float at(int n, int c, int h, int w) const {
    return *(plane(n, c) + static_cast<std::size_t>(h) * shape_.w + w);
  }

  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{};
  std::vector<float> data_;
};

/// Row-major float32 matrix used for the token-level parts of attention.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  float& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  float operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Convolution hyperparameters. Validated on construction.
class ConvSpec {
 public:
  ConvSpec(int in_channels, int out_channels, int kernel, int stride = 1,
           int padding = 0, int groups = 1, bool has_bias = false);
  ConvSpec(int in_channels, int out_channels, int kernel_h, int kernel_w,
           int stride, int padding, int groups, bool has_bias);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel_h() const { return kh_; }
  int kernel_w() const { return kw_; }
  int stride() const { return stride_; }
  int padding() const { return padding_; }
  int groups() const { return groups_; }
  bool has_bias() const { return has_bias_; }

  ConvSpec with_bias(bool b) const;

  /// Expected weight extent: out x in/groups x kh x kw.
  Shape weight_shape() const;
  int out_size(int in) const { return (in + 2 * padding_ - kh_) / stride_ + 1; }
  int out_size_w(int in) const { return (in + 2 * padding_ - kw_) / stride_ + 1; }
  std::int64_t param_count() const;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;

 private:
  int in_;
  int out_;
  int kh_;
  int kw_;
  int stride_;
  int padding_;
  int groups_;
  bool has_bias_;
};

/// Inference-mode batch norm parameters (running statistics).
struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
  float eps = 1e-5f;

  int channels() const { return static_cast<int>(gamma.size()); }
  static BatchNormParams identity(int channels, float eps = 1e-5f);
};

// Kernels. All are pure; none broadcasts implicitly.

Tensor conv2d(const Tensor& input, const Tensor& weight,
              std::optional<std::span<const float>> bias, const ConvSpec& spec);

/// Fast path for groups == in == out. Bitwise equal to conv2d with g = C.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight,
                        std::optional<std::span<const float>> bias,
                        const ConvSpec& spec);

Tensor batch_norm2d(const Tensor& input, const BatchNormParams& bn);

Tensor gelu(const Tensor& input);
float gelu(float x);

Matrix softmax_lastdim(const Matrix& input);
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

std::vector<Tensor> channel_split(const Tensor& input, std::span<const int> sizes);
Tensor channel_concat(std::span<const Tensor> parts);

Tensor global_avg_pool(const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale_channels(const Tensor& x, std::span<const float> lambda);
/// x + lambda (.) branch, channel-wise; the residual update used by every block.
Tensor add_scaled(const Tensor& x, const Tensor& branch, std::span<const float> lambda);

/// Tokens of sample n as a (H*W) x C matrix, and the inverse.
Matrix to_tokens(const Tensor& t, int n);
void from_tokens(const Matrix& m, Tensor& dst, int n);

}  // namespace mvit
