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
#include <vector>

#include "mvit/tensor.hpp"

namespace mvit {

/// A convolution with its kernel and optional bias (empty when absent).
struct ConvLayer {
  ConvSpec spec;
  Tensor weight;
  std::vector<float> bias;

  Tensor forward(const Tensor& x) const;
  std::int64_t param_count() const { return static_cast<std::int64_t>(weight.size() + bias.size()); }
};

/// Convolution followed by an inference batch norm. After BN fusion the norm
/// is gone and the conv carries the folded bias.
struct ConvBn {
  ConvLayer conv;
  std::optional<BatchNormParams> bn;

  Tensor forward(const Tensor& x) const;
};

}  // namespace mvit
