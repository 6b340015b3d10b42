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

#include <filesystem>
#include <string>

#include "json.hpp"

#include "mvit/model.hpp"
#include "mvit/model_config.hpp"

namespace mvit {

inline constexpr int kSidecarVersion = 1;

/// Canonical JSON form of a config. Keys are emitted sorted, so
/// emit(parse(emit(cfg))) is byte-identical to emit(cfg).
nlohmann::json config_to_json(const ModelConfig& cfg);
/// Throws ConfigError on missing or mistyped fields.
ModelConfig config_from_json(const nlohmann::json& doc);

nlohmann::json stage_to_json(const StageConfig& st);
StageConfig stage_from_json(const nlohmann::json& doc);

std::string emit_sidecar(const ModelConfig& cfg);
ModelConfig parse_sidecar(const std::string& text);

/// `model.mvitw` -> `model.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& weights);

void save_model(const Model& model, const std::filesystem::path& weights_path);
Model load_model(const std::filesystem::path& weights_path);

}  // namespace mvit
