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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvit/blocks.hpp"
#include "mvit/model_config.hpp"
#include "mvit/tensor_set.hpp"

namespace mvit {

using ModelWeights = TensorSet;

struct Model {
  ModelConfig config;
  ModelWeights weights;
};

/// Seeded random initialisation of an unfused model for `cfg` (uses cfg.seed).
Model build_model(const ModelConfig& cfg);

/// A published variant with `key=value` overrides applied first.
Model build_variant(std::string_view name, const std::vector<std::string>& overrides,
                    std::uint64_t seed);

Model build_ablation(std::string_view base, AblationMode mode, std::uint64_t seed);

/// Draws non-trivial BN statistics (gamma, var in [0.5, 1.5]; beta, mean in
/// [-0.1, 0.1]). Identity statistics make fusion checks vacuous.
void randomize_batchnorm(ModelWeights& weights, std::uint64_t seed);

/// Sets every layer-scale vector to zero.
void zero_layer_scales(ModelWeights& weights);

bool is_batchnorm_leaf(std::string_view name);
bool is_layer_scale(std::string_view name);

struct StageModules {
  std::optional<PatchEmbed> embed;  // absent for the first stage
  std::vector<EncoderBlock> blocks;
};

/// Structured, validated view of (config, weights) ready for inference.
/// Immutable after construction; forward() may run concurrently.
class Network {
 public:
  /// Throws StructureError / ShapeError when the weights don't match `cfg`.
  Network(const ModelConfig& cfg, const ModelWeights& weights);

  const ModelConfig& config() const { return cfg_; }
  const Stem& stem() const { return stem_; }
  const std::vector<StageModules>& stages() const { return stages_; }
  const ClassifierHead& head() const { return head_; }

  /// Image batch N x 3 x R x R (R divisible by the stem reduction) -> N x classes.
  Matrix forward(const Tensor& input) const;
  /// Final feature map before the classifier head.
  Tensor features(const Tensor& input) const;

 private:
  ModelConfig cfg_;
  Stem stem_;
  std::vector<StageModules> stages_;
  ClassifierHead head_;
};

Matrix forward(const ModelConfig& cfg, const ModelWeights& weights, const Tensor& input);

}  // namespace mvit
