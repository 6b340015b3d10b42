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

#include "mvit/model.hpp"

#include <random>

#include "mvit/assembly.hpp"
#include "mvit/errors.hpp"

namespace mvit {

Model build_model(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.fused) throw ConfigError("build_model: cannot initialise a fused config");
  Model model{cfg, {}};
  TruncatedNormal init(cfg.seed);
  ParamWriter w(model.weights, init);

  declare_stem(w, cfg.stem_ramp);
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const int stage = static_cast<int>(s) + 1;
    const StageConfig& st = cfg.stages[s];
    if (s > 0) {
      declare_patch_embed(w, names::embed(stage), cfg.stages[s - 1].width, st.width,
                          cfg.ffn_expansion);
    }
    for (int b = 0; b < st.depth; ++b) {
      declare_encoder(w, names::block(stage, b), st, cfg.ffn_expansion);
    }
  }
  declare_head(w, names::kHeadFc, cfg.num_classes, cfg.stages.back().width);
  return model;
}

Model build_variant(std::string_view name, const std::vector<std::string>& overrides,
                    std::uint64_t seed) {
  ModelConfig cfg = variant_config(name);
  for (const std::string& o : overrides) apply_override(cfg, o);
  cfg.seed = seed;
  return build_model(cfg);
}

Model build_ablation(std::string_view base, AblationMode mode, std::uint64_t seed) {
  ModelConfig cfg = ablation_config(variant_config(base), mode);
  cfg.seed = seed;
  return build_model(cfg);
}

bool is_batchnorm_leaf(std::string_view name) {
  return name.ends_with(".gamma") || name.ends_with(".beta") || name.ends_with(".mean") ||
         name.ends_with(".var");
}

bool is_layer_scale(std::string_view name) {
  const auto dot = name.rfind('.');
  const std::string_view leaf = dot == std::string_view::npos ? name : name.substr(dot + 1);
  return leaf.starts_with("lambda_");
}

void randomize_batchnorm(ModelWeights& weights, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto uniform = [&gen](double lo, double hi) {
    return static_cast<float>(lo + (hi - lo) * (static_cast<double>(gen() >> 11) / 9007199254740992.0));
  };
  for (auto& [name, t] : weights) {
    if (!is_batchnorm_leaf(name)) continue;
    const bool scale_like = name.ends_with(".gamma") || name.ends_with(".var");
    for (float& v : t.values) v = scale_like ? uniform(0.5, 1.5) : uniform(-0.1, 0.1);
  }
}

void zero_layer_scales(ModelWeights& weights) {
  for (auto& [name, t] : weights) {
    if (is_layer_scale(name)) std::fill(t.values.begin(), t.values.end(), 0.0f);
  }
}

Network::Network(const ModelConfig& cfg, const ModelWeights& weights) : cfg_(cfg) {
  cfg_.validate();
  const UnitOptions opt{cfg_.fused, cfg_.bn_eps};
  ParamReader r(weights);
  stem_ = load_stem(r, cfg_.stem_ramp, opt);
  for (std::size_t s = 0; s < cfg_.stages.size(); ++s) {
    const int stage = static_cast<int>(s) + 1;
    const StageConfig& st = cfg_.stages[s];
    StageModules modules;
    if (s > 0) {
      modules.embed = load_patch_embed(r, names::embed(stage), cfg_.stages[s - 1].width, st.width,
                                       cfg_.ffn_expansion, opt);
    }
    for (int b = 0; b < st.depth; ++b) {
      modules.blocks.push_back(load_encoder(r, names::block(stage, b), st, cfg_.ffn_expansion, opt));
    }
    stages_.push_back(std::move(modules));
  }
  head_ = load_head(r, names::kHeadFc, cfg_.num_classes, cfg_.stages.back().width);
  r.finish();
}

Tensor Network::features(const Tensor& input) const {
  if (input.shape().c != 3) throw ShapeError("forward", "input C", 3, input.shape().c);
  Tensor x = stem_forward(input, stem_);
  for (const StageModules& stage : stages_) {
    if (stage.embed) x = patch_embed_forward(x, *stage.embed);
    for (const EncoderBlock& block : stage.blocks) x = encoder_forward(x, block);
  }
  return x;
}

Matrix Network::forward(const Tensor& input) const {
  return classifier_head(features(input), head_);
}

Matrix forward(const ModelConfig& cfg, const ModelWeights& weights, const Tensor& input) {
  return Network(cfg, weights).forward(input);
}

}  // namespace mvit
