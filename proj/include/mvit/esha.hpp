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

#include <optional>

#include "mvit/layers.hpp"
#include "mvit/tensor.hpp"

namespace mvit {

/// Hyperparameters of one efficient single-head attention mixer.
///
/// The grouped 3x3 input projection produces query_dim + key_dim + value_dim
/// + untouched_dim channels. Only the value slice (ratio * channels) takes
/// part in attention; the untouched slice bypasses it through an activation.
struct EshaConfig {
  int channels = 0;
  int query_dim = 16;
  int key_dim = 16;
  double ratio = 0.25;
  int groups = 32;
  int spatial_reduction = 1;

  int value_dim() const;
  int untouched_dim() const { return channels - value_dim(); }
  int proj_out() const { return query_dim + key_dim + value_dim() + untouched_dim(); }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const EshaConfig&, const EshaConfig&) = default;
};

inline constexpr int kMaxQueryKeyDim = 16;

struct EshaWeights {
  ConvBn w_ip;                    // 3x3, groups g, C -> proj_out, with bias
  std::optional<ConvLayer> sr_k;  // depthwise 3x3 stride SR, only when SR > 1
  std::optional<ConvLayer> sr_v;
  ConvBn w_op;                    // 1x1, C -> C, with bias

  /// Throws ShapeError / ConfigError if any kernel disagrees with `cfg`.
  void validate(const EshaConfig& cfg) const;
};

struct EshaProjection {
  Tensor q;
  Tensor k;
  Tensor v;
  Tensor u;
};

ConvSpec esha_input_spec(const EshaConfig& cfg);
ConvSpec esha_reduce_spec(int channels, int sr);
ConvSpec esha_output_spec(const EshaConfig& cfg);

EshaProjection esha_project(const Tensor& x, const EshaWeights& w, const EshaConfig& cfg);

/// Depthwise 3x3 stride-SR reduction of a key or value map. SR == 1 returns
/// the input untouched and ignores `kernel`.
Tensor spatial_reduce(const Tensor& t, const std::optional<ConvLayer>& kernel, int sr);

/// Row-softmax of (Q tokens x K tokens) / sqrt(query_dim) for batch element n.
Matrix esha_attention_map(const Tensor& q, const Tensor& k, int n);

/// softmax(Q K^T / sqrt(C_q)) V per batch element; output (N, C_v, H, W).
Tensor esha_attend(const Tensor& q, const Tensor& k, const Tensor& v, const EshaConfig& cfg);

Tensor esha_forward(const Tensor& x, const EshaWeights& w, const EshaConfig& cfg);

}  // namespace mvit
