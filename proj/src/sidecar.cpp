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

#include "mvit/sidecar.hpp"

#include <fstream>
#include <sstream>

#include "mvit/errors.hpp"
#include "mvit/weights_io.hpp"

namespace mvit {

using nlohmann::json;

json stage_to_json(const StageConfig& st) {
  json s = {{"width", st.width}, {"depth", st.depth}, {"mixer", to_string(st.mixer)}};
  if (st.mixer == MixerKind::kEsha) {
    s["esha"] = {{"query_dim", st.query_dim}, {"key_dim", st.key_dim}, {"ratio", st.ratio},
                 {"groups", st.groups}, {"sr", st.spatial_reduction}};
  }
  return s;
}

json config_to_json(const ModelConfig& cfg) {
  json stages = json::array();
  for (const StageConfig& st : cfg.stages) stages.push_back(stage_to_json(st));
  return json{{"format_version", kSidecarVersion},
              {"variant", cfg.variant},
              {"stages", std::move(stages)},
              {"stem_ramp", cfg.stem_ramp},
              {"alpha", cfg.ffn_expansion},
              {"num_classes", cfg.num_classes},
              {"resolution", cfg.resolution},
              {"bn_eps", cfg.bn_eps},
              {"fused", cfg.fused},
              {"seed", cfg.seed}};
}

namespace {

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(std::string("sidecar: missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sidecar: field '") + key + "': " + e.what());
  }
}

}  // namespace

StageConfig stage_from_json(const json& s) {
  StageConfig st;
  st.width = field<int>(s, "width");
  st.depth = field<int>(s, "depth");
  st.mixer = mixer_kind_from_string(field<std::string>(s, "mixer"));
  if (st.mixer == MixerKind::kEsha) {
    const json e = field<json>(s, "esha");
    st.query_dim = field<int>(e, "query_dim");
    st.key_dim = field<int>(e, "key_dim");
    st.ratio = field<double>(e, "ratio");
    st.groups = field<int>(e, "groups");
    st.spatial_reduction = field<int>(e, "sr");
  }
  return st;
}

ModelConfig config_from_json(const json& doc) {
  const int version = field<int>(doc, "format_version");
  if (version != kSidecarVersion) {
    throw ConfigError("sidecar: unsupported format_version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.variant = field<std::string>(doc, "variant");
  cfg.stem_ramp = field<std::vector<int>>(doc, "stem_ramp");
  cfg.ffn_expansion = field<int>(doc, "alpha");
  cfg.num_classes = field<int>(doc, "num_classes");
  cfg.resolution = field<int>(doc, "resolution");
  cfg.bn_eps = field<double>(doc, "bn_eps");
  cfg.fused = field<bool>(doc, "fused");
  cfg.seed = field<std::uint64_t>(doc, "seed");
  const json stages = field<json>(doc, "stages");
  if (!stages.is_array()) throw ConfigError("sidecar: 'stages' must be an array");
  for (const json& s : stages) cfg.stages.push_back(stage_from_json(s));
  cfg.validate();
  return cfg;
}

std::string emit_sidecar(const ModelConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

ModelConfig parse_sidecar(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sidecar: invalid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

std::filesystem::path sidecar_path(const std::filesystem::path& weights) {
  std::filesystem::path p = weights;
  p.replace_extension(".json");
  return p;
}

void save_model(const Model& model, const std::filesystem::path& weights_path) {
  save_container(model.weights, weights_path);
  const std::string text = emit_sidecar(model.config);
  write_file(sidecar_path(weights_path),
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Model load_model(const std::filesystem::path& weights_path) {
  const auto bytes = read_file(sidecar_path(weights_path));
  Model m{parse_sidecar(std::string(bytes.begin(), bytes.end())), load_container(weights_path)};
  return m;
}

}  // namespace mvit
