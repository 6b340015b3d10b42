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

#include "mvit/model_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "mvit/errors.hpp"

namespace mvit {

const char* to_string(MixerKind kind) {
  return kind == MixerKind::kEsha ? "esha" : "dwconv";
}

MixerKind mixer_kind_from_string(std::string_view s) {
  if (s == "esha") return MixerKind::kEsha;
  if (s == "dwconv") return MixerKind::kDwConv;
  throw ConfigError("unknown mixer '" + std::string(s) + "' (expected dwconv or esha)");
}

EshaConfig StageConfig::esha() const {
  EshaConfig e;
  e.channels = width;
  e.query_dim = query_dim;
  e.key_dim = key_dim;
  e.ratio = ratio;
  e.groups = groups;
  e.spatial_reduction = spatial_reduction;
  return e;
}

void ModelConfig::validate() const {
  if (stages.empty()) throw ConfigError("model needs at least one stage");
  if (stem_ramp.empty()) throw ConfigError("stem ramp must have at least one layer");
  if (stem_ramp.size() > 8) throw ConfigError("stem ramp longer than 8 layers");
  for (int c : stem_ramp) {
    if (c < 1) throw ConfigError("stem ramp widths must be >= 1");
  }
  if (stem_ramp.back() != stages.front().width) {
    throw ConfigError("stem ramp must end at the stage-1 width " +
                      std::to_string(stages.front().width) + ", got " +
                      std::to_string(stem_ramp.back()));
  }
  if (ffn_expansion < 1) throw ConfigError("ffn expansion must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (!(bn_eps >= 0.0)) throw ConfigError("bn_eps must be >= 0");
  if (resolution < 1 || resolution % stem_reduction() != 0) {
    throw ConfigError("resolution " + std::to_string(resolution) + " must be a positive multiple of " +
                      std::to_string(stem_reduction()));
  }
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const StageConfig& st = stages[s];
    const std::string tag = "stage" + std::to_string(s + 1);
    if (st.width < 1) throw ConfigError(tag + ": width must be >= 1");
    if (st.depth < 0) throw ConfigError(tag + ": depth must be >= 0");
    if (st.mixer == MixerKind::kEsha) {
      try {
        st.esha().validate();
      } catch (const ConfigError& e) {
        throw ConfigError(tag + ": " + e.what());
      }
    }
  }
}

namespace {

StageConfig dw_stage(int width, int depth) {
  StageConfig s;
  s.width = width;
  s.depth = depth;
  s.mixer = MixerKind::kDwConv;
  return s;
}

StageConfig esha_stage(int width, int depth, int sr) {
  StageConfig s;
  s.width = width;
  s.depth = depth;
  s.mixer = MixerKind::kEsha;
  s.query_dim = 16;
  s.key_dim = 16;
  s.ratio = 0.25;
  s.groups = 32;
  s.spatial_reduction = sr;
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("override " + std::string(key) + ": '" + std::string(v) + "' is not an integer");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  // "1/4" style fractions are accepted for the ratio.
  if (auto slash = v.find('/'); slash != std::string_view::npos) {
    const double num = parse_double(key, v.substr(0, slash));
    const double den = parse_double(key, v.substr(slash + 1));
    if (den == 0.0) throw ConfigError("override " + std::string(key) + ": division by zero");
    return num / den;
  }
  try {
    std::size_t used = 0;
    const std::string s(v);
    const double out = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("override " + std::string(key) + ": '" + std::string(v) + "' is not a number");
  }
}

}  // namespace

ModelConfig variant_config(std::string_view name) {
  const std::string v = upper(name);
  ModelConfig cfg;
  cfg.variant = v;
  if (v == "S1") {
    cfg.stages = {dw_stage(128, 2), dw_stage(256, 5), esha_stage(320, 5, 2)};
  } else if (v == "S2") {
    cfg.stages = {dw_stage(128, 2), dw_stage(320, 7), esha_stage(448, 5, 2)};
  } else if (v == "S3") {
    cfg.stages = {dw_stage(192, 3), dw_stage(384, 6), esha_stage(512, 6, 1)};
  } else {
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected S1, S2 or S3)");
  }
  const int c1 = cfg.stages.front().width;
  cfg.stem_ramp = {c1 / 8, c1 / 4, c1 / 2, c1};
  cfg.validate();
  return cfg;
}

void apply_override(ModelConfig& cfg, std::string_view key, std::string_view value) {
  const std::string k(key);
  if (key.starts_with("stage")) {
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) throw ConfigError("override '" + k + "': expected stage<N>.<field>");
    const int index = parse_int(key, key.substr(5, dot - 5));
    if (index < 1 || index > static_cast<int>(cfg.stages.size())) {
      throw ConfigError("override '" + k + "': no stage " + std::to_string(index));
    }
    StageConfig& st = cfg.stages[index - 1];
    const std::string_view field = key.substr(dot + 1);
    if (field == "width") {
      st.width = parse_int(key, value);
      if (index == 1 && !cfg.stem_ramp.empty()) cfg.stem_ramp.back() = st.width;
    } else if (field == "depth") {
      st.depth = parse_int(key, value);
    } else if (field == "mixer") {
      st.mixer = mixer_kind_from_string(value);
    } else if (field == "qk") {
      st.query_dim = st.key_dim = parse_int(key, value);
    } else if (field == "ratio") {
      st.ratio = parse_double(key, value);
    } else if (field == "groups" || field == "g") {
      st.groups = parse_int(key, value);
    } else if (field == "sr") {
      st.spatial_reduction = parse_int(key, value);
    } else {
      throw ConfigError("override '" + k + "': unknown stage field");
    }
  } else if (key == "alpha") {
    cfg.ffn_expansion = parse_int(key, value);
  } else if (key == "num_classes") {
    cfg.num_classes = parse_int(key, value);
  } else if (key == "resolution") {
    cfg.resolution = parse_int(key, value);
  } else if (key == "bn_eps") {
    cfg.bn_eps = parse_double(key, value);
  } else if (key == "stem_ramp") {
    std::vector<int> ramp;
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      ramp.push_back(parse_int(key, rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    cfg.stem_ramp = std::move(ramp);
  } else {
    throw ConfigError("override '" + k + "': unknown key");
  }
  cfg.validate();
}

void apply_override(ModelConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

AblationMode ablation_from_string(std::string_view s) {
  if (s == "no_group") return AblationMode::kNoGroup;
  if (s == "low_res_attn") return AblationMode::kLowResAttn;
  throw ConfigError("unknown ablation '" + std::string(s) + "' (expected no_group or low_res_attn)");
}

const char* to_string(AblationMode mode) {
  return mode == AblationMode::kNoGroup ? "no_group" : "low_res_attn";
}

ModelConfig ablation_config(ModelConfig base, AblationMode mode) {
  for (StageConfig& st : base.stages) {
    if (st.mixer != MixerKind::kEsha) continue;
    if (mode == AblationMode::kNoGroup) st.groups = 1;
    if (mode == AblationMode::kLowResAttn) st.spatial_reduction = 2;
  }
  base.variant += std::string("-") + to_string(mode);
  base.validate();
  return base;
}

}  // namespace mvit
