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
#include <string_view>
#include <vector>

#include "mvit/esha.hpp"

namespace mvit {

enum class MixerKind { kDwConv, kEsha };

const char* to_string(MixerKind kind);
MixerKind mixer_kind_from_string(std::string_view s);

struct StageConfig {
  int width = 0;
  int depth = 0;
  MixerKind mixer = MixerKind::kDwConv;
  // Attention fields; only meaningful for kEsha stages.
  int query_dim = 16;
  int key_dim = 16;
  double ratio = 0.25;
  int groups = 32;
  int spatial_reduction = 1;

  EshaConfig esha() const;

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct ModelConfig {
  std::string variant;
  std::vector<StageConfig> stages;
  std::vector<int> stem_ramp;
  int ffn_expansion = 2;
  int num_classes = 1000;
  int resolution = 224;
  double bn_eps = 1e-5;
  bool fused = false;
  std::uint64_t seed = 0;

  int stem_reduction() const { return 1 << stem_ramp.size(); }

  /// Throws ConfigError on the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The three published variants: "S1", "S2", "S3" (case-insensitive).
ModelConfig variant_config(std::string_view name);

/// Applies `key=value`. Keys: stage{s}.{width,depth,mixer,qk,ratio,groups,sr},
/// alpha, num_classes, resolution, stem_ramp (comma separated), bn_eps.
/// Validates the whole config afterwards.
void apply_override(ModelConfig& cfg, std::string_view key, std::string_view value);
void apply_override(ModelConfig& cfg, std::string_view assignment);

enum class AblationMode { kNoGroup, kLowResAttn };

AblationMode ablation_from_string(std::string_view s);
const char* to_string(AblationMode mode);

/// no_group: g = 1 in every attention projection.
/// low_res_attn: SR = 2 in every attention stage.
ModelConfig ablation_config(ModelConfig base, AblationMode mode);

}  // namespace mvit
