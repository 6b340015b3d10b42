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
#include <string>
#include <vector>

#include "mvit/model_config.hpp"
#include "mvit/tensor.hpp"

namespace mvit {

struct CostRow {
  std::string name;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  Shape output;  // per-sample (N = 1)
};

/// Per-layer parameter and multiply-accumulate accounting.
///
/// Totals are multiply-accumulates, the figure efficient-model benchmarks
/// usually label "FLOPs"; flops(true) gives the strict 2x count. Softmax,
/// GELU, BN and pooling are not counted.
struct CostReport {
  std::string variant;
  int resolution = 0;
  bool fused = false;
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;

  std::int64_t flops(bool strict) const { return strict ? 2 * total_macs : total_macs; }
};

/// Closed-form counts derived from the config alone, evaluated at cfg.resolution.
CostReport count_params(const ModelConfig& cfg);
CostReport count_macs(const ModelConfig& cfg, int resolution);

}  // namespace mvit
