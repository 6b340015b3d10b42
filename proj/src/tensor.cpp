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

#include "mvit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mvit/errors.hpp"

namespace mvit {

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w);
}

namespace {

void check_extent(const Shape& s) {
  const char* names[] = {"N", "C", "H", "W"};
  const int dims[] = {s.n, s.c, s.h, s.w};
  for (int i = 0; i < 4; ++i) {
    if (dims[i] < 1) throw ShapeError("tensor", names[i], 1, dims[i]);
  }
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a.n != b.n) throw ShapeError(op, "N", a.n, b.n);
  if (a.c != b.c) throw ShapeError(op, "C", a.c, b.c);
  if (a.h != b.h) throw ShapeError(op, "H", a.h, b.h);
  if (a.w != b.w) throw ShapeError(op, "W", a.w, b.w);
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  check_extent(shape_);
  data_.assign(shape_.elements(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  check_extent(shape_);
  if (data_.size() != shape_.elements()) {
    throw ShapeError("tensor", "elements", static_cast<std::int64_t>(shape_.elements()),
                     static_cast<std::int64_t>(data_.size()));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

BatchNormParams BatchNormParams::identity(int channels, float eps) {
  BatchNormParams bn;
  bn.gamma.assign(channels, 1.0f);
  bn.beta.assign(channels, 0.0f);
  bn.mean.assign(channels, 0.0f);
  bn.var.assign(channels, 1.0f);
  bn.eps = eps;
  return bn;
}

Tensor batch_norm2d(const Tensor& input, const BatchNormParams& bn) {
  const Shape& s = input.shape();
  const auto c = static_cast<std::size_t>(s.c);
  if (bn.gamma.size() != c) throw ShapeError("batch_norm2d", "gamma", s.c, bn.gamma.size());
  if (bn.beta.size() != c) throw ShapeError("batch_norm2d", "beta", s.c, bn.beta.size());
  if (bn.mean.size() != c) throw ShapeError("batch_norm2d", "mean", s.c, bn.mean.size());
  if (bn.var.size() != c) throw ShapeError("batch_norm2d", "var", s.c, bn.var.size());

  Tensor out(s);
  const std::size_t plane = s.plane();
  for (int ch = 0; ch < s.c; ++ch) {
    if (!(bn.var[ch] >= 0.0f)) {
      throw ConfigError("batch_norm2d: running_var must be >= 0 (channel " +
                        std::to_string(ch) + ")");
    }
    const double scale = static_cast<double>(bn.gamma[ch]) /
                         std::sqrt(static_cast<double>(bn.var[ch]) + bn.eps);
    const double mean = bn.mean[ch];
    const double beta = bn.beta[ch];
    for (int n = 0; n < s.n; ++n) {
      const float* src = input.plane(n, ch);
      float* dst = out.plane(n, ch);
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = static_cast<float>((src[i] - mean) * scale + beta);
      }
    }
  }
  return out;
}

float gelu(float x) {
  const double v = x;
  return static_cast<float>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
}

Tensor gelu(const Tensor& input) {
  Tensor out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = gelu(src[i]);
  return out;
}

Matrix softmax_lastdim(const Matrix& input) {
  Matrix out(input.rows, input.cols);
  std::vector<double> e(input.cols);
  for (int r = 0; r < input.rows; ++r) {
    const float* row = input.data.data() + static_cast<std::size_t>(r) * input.cols;
    const float mx = *std::max_element(row, row + input.cols);
    double sum = 0.0;
    for (int c = 0; c < input.cols; ++c) {
      e[c] = std::exp(static_cast<double>(row[c]) - mx);
      sum += e[c];
    }
    for (int c = 0; c < input.cols; ++c) out(r, c) = static_cast<float>(e[c] / sum);
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul", "inner", a.cols, b.rows);
  Matrix out(a.rows, b.cols);
  std::vector<double> acc(b.cols);
  for (int i = 0; i < a.rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int p = 0; p < a.cols; ++p) {
      const double av = a(i, p);
      const float* brow = b.data.data() + static_cast<std::size_t>(p) * b.cols;
      for (int j = 0; j < b.cols; ++j) acc[j] += av * brow[j];
    }
    for (int j = 0; j < b.cols; ++j) out(i, j) = static_cast<float>(acc[j]);
  }
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ShapeError("matmul_transposed", "inner", a.cols, b.cols);
  Matrix out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const float* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    for (int j = 0; j < b.rows; ++j) {
      const float* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
      double acc = 0.0;
      for (int p = 0; p < a.cols; ++p) acc += static_cast<double>(arow[p]) * brow[p];
      out(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<Tensor> channel_split(const Tensor& input, std::span<const int> sizes) {
  const Shape& s = input.shape();
  long total = 0;
  for (int sz : sizes) {
    if (sz < 1) throw ShapeError("channel_split", "part", 1, sz);
    total += sz;
  }
  if (total != s.c) throw ShapeError("channel_split", "C", s.c, total);

  std::vector<Tensor> parts;
  parts.reserve(sizes.size());
  int offset = 0;
  for (int sz : sizes) {
    Tensor part(Shape{s.n, sz, s.h, s.w});
    for (int n = 0; n < s.n; ++n) {
      std::memcpy(part.plane(n, 0), input.plane(n, offset),
                  sizeof(float) * s.plane() * sz);
    }
    parts.push_back(std::move(part));
    offset += sz;
  }
  return parts;
}

Tensor channel_concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("channel_concat", "parts", 1, 0);
  const Shape& first = parts.front().shape();
  int channels = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.n != first.n) throw ShapeError("channel_concat", "N", first.n, s.n);
    if (s.h != first.h) throw ShapeError("channel_concat", "H", first.h, s.h);
    if (s.w != first.w) throw ShapeError("channel_concat", "W", first.w, s.w);
    channels += s.c;
  }
  Tensor out(Shape{first.n, channels, first.h, first.w});
  for (int n = 0; n < first.n; ++n) {
    int offset = 0;
    for (const Tensor& p : parts) {
      std::memcpy(out.plane(n, offset), p.plane(n, 0),
                  sizeof(float) * first.plane() * p.shape().c);
      offset += p.shape().c;
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, s.c, 1, 1});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = input.plane(n, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += src[i];
      out.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(plane));
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a.shape(), b.shape());
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] + y[i];
  return out;
}

Tensor scale_channels(const Tensor& x, std::span<const float> lambda) {
  const Shape& s = x.shape();
  if (lambda.size() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("scale_channels", "lambda", s.c, lambda.size());
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] = lambda[c] * src[i];
    }
  }
  return out;
}

Tensor add_scaled(const Tensor& x, const Tensor& branch, std::span<const float> lambda) {
  const Shape& s = x.shape();
  require_same_shape("add_scaled", s, branch.shape());
  if (lambda.size() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("add_scaled", "lambda", s.c, lambda.size());
  }
  Tensor out = x;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      // A zero layer scale disables the branch exactly, including -0.0 inputs.
      if (lambda[c] == 0.0f) continue;
      const float* b = branch.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] += lambda[c] * b[i];
    }
  }
  return out;
}

Matrix to_tokens(const Tensor& t, int n) {
  const Shape& s = t.shape();
  const int tokens = static_cast<int>(s.plane());
  Matrix m(tokens, s.c);
  for (int c = 0; c < s.c; ++c) {
    const float* src = t.plane(n, c);
    for (int i = 0; i < tokens; ++i) m(i, c) = src[i];
  }
  return m;
}

void from_tokens(const Matrix& m, Tensor& dst, int n) {
  const Shape& s = dst.shape();
  if (m.rows != static_cast<int>(s.plane())) throw ShapeError("from_tokens", "tokens", s.plane(), m.rows);
  if (m.cols != s.c) throw ShapeError("from_tokens", "C", s.c, m.cols);
  for (int c = 0; c < s.c; ++c) {
    float* out = dst.plane(n, c);
    for (int i = 0; i < m.rows; ++i) out[i] = m(i, c);
  }
}

}  // namespace mvit
