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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvit/blocks.hpp"
#include "mvit/esha.hpp"
#include "mvit/layers.hpp"
#include "mvit/tensor.hpp"

namespace mvit::testing {

/// Seeded source of random shapes, tensors and parameters for property
/// tests. Every draw goes through one mt19937_64 stream, so a failing case
/// is reproduced from its seed alone.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int range(int lo, int hi);  // inclusive
  double real(double lo, double hi);
  float normal(double stddev = 1.0);
  bool coin(double p = 0.5);

  template <typename T>
  const T& pick(const std::vector<T>& options) {
    return options[static_cast<std::size_t>(range(0, static_cast<int>(options.size()) - 1))];
  }

  std::vector<float> values(std::size_t n, double stddev = 1.0);
  std::vector<float> uniform(std::size_t n, double lo, double hi);
  Tensor tensor(const Shape& s, double stddev = 1.0);
  Matrix matrix(int rows, int cols, double stddev = 1.0);
  BatchNormParams batch_norm(int channels);
  ConvLayer conv(const ConvSpec& spec, double stddev = 0.3);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Random ESHA weights for `cfg`, unfused, with non-trivial BN statistics.
EshaWeights random_esha(Gen& g, const EshaConfig& cfg);
FfnWeights random_ffn(Gen& g, int channels, int expansion = 2);
EncoderBlock random_encoder(Gen& g, int channels, bool esha, const EshaConfig& attn = {});

struct Closeness {
  bool ok = true;
  double max_abs = 0.0;
  std::string detail;
};

/// |a - b| <= atol + rtol * |b| elementwise; shapes must match.
Closeness allclose(std::span<const float> got, std::span<const float> want, double rtol, double atol);
Closeness allclose(const Tensor& got, const Tensor& want, double rtol, double atol);
Closeness allclose(const Matrix& got, const Matrix& want, double rtol, double atol);

bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace mvit::testing

namespace mvit::oracle {

// Brute-force references. Straight loop nests in double precision with no
// shared code paths with the engine kernels.

Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<float>& bias, int stride, int pad,
              int groups);
Tensor conv(const Tensor& x, const ConvLayer& layer);
Tensor batch_norm(const Tensor& x, const BatchNormParams& bn);
double gelu(double x);
Tensor gelu(const Tensor& x);
Matrix softmax(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Tensor global_avg_pool(const Tensor& x);
Tensor slice_channels(const Tensor& x, int begin, int count);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor residual(const Tensor& x, const Tensor& branch, const std::vector<float>& lambda);

/// softmax(Q K^T / sqrt(C_q)) V per sample, token loops written out.
Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v);
Tensor conv_bn(const Tensor& x, const ConvBn& unit);
Tensor esha(const Tensor& x, const EshaWeights& w, const EshaConfig& cfg);
Tensor ffn(const Tensor& x, const FfnWeights& w);
Tensor encoder(const Tensor& x, const EncoderBlock& b);
Tensor patch_embed(const Tensor& x, const PatchEmbed& pe);
Tensor stem(const Tensor& x, const Stem& s);
Matrix head(const Tensor& x, const ClassifierHead& h);

}  // namespace mvit::oracle
