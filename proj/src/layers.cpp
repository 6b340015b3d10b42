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

#include "mvit/layers.hpp"

namespace mvit {

Tensor ConvLayer::forward(const Tensor& x) const {
  std::optional<std::span<const float>> b;
  if (!bias.empty()) b = std::span<const float>(bias);
  if (spec.groups() == spec.in_channels() && spec.in_channels() == spec.out_channels()) {
    return depthwise_conv2d(x, weight, b, spec);
  }
  return conv2d(x, weight, b, spec);
}

Tensor ConvBn::forward(const Tensor& x) const {
  Tensor y = conv.forward(x);
  if (bn) return batch_norm2d(y, *bn);
  return y;
}

}  // namespace mvit
