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

#include <string>
#include <vector>

#include "mvit/layers.hpp"
#include "mvit/model.hpp"

namespace mvit {

/// conv -> BN  ==>  conv' with W' = W * s, b' = (b - mean) * s + beta,
/// s = gamma / sqrt(var + eps), per output channel.
ConvLayer fold_batchnorm(const ConvLayer& conv, const BatchNormParams& bn);

/// BN -> 1x1 conv  ==>  conv' with W'[o,i] = W[o,i] * s_i and
/// b'[o] = b[o] + sum_i W[o,i] * (beta_i - mean_i * s_i). Only valid without
/// padding, so restricted to pointwise, ungrouped convs.
ConvLayer fold_input_batchnorm(const BatchNormParams& bn, const ConvLayer& conv);

/// One conv/BN adjacency in the model graph.
struct FusionSite {
  enum class Order { kConvThenNorm, kNormThenConv };
  Order order;
  std::string conv;  // prefix of the conv's weight/bias
  std::string norm;  // prefix of gamma/beta/mean/var
  ConvSpec spec;     // unfused conv spec
};

std::vector<FusionSite> fusion_sites(const ModelConfig& cfg);

/// Rewrites every conv/BN pair into a single biased conv and drops all BN
/// tensors. Returns a new model with config.fused = true; fusing a fused
/// model returns it unchanged. Throws StructureError on an orphan BN.
Model fuse_batchnorm(const Model& model);

}  // namespace mvit
