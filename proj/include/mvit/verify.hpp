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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvit/tensor_set.hpp"

namespace mvit {

/// One entry of a golden manifest.
struct FixtureCase {
  std::string name;
  std::string op;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;  // relative to the manifest directory
  std::string expected;
  double rtol = 0.0;
  double atol = 0.0;
  std::uint64_t seed = 0;
  // file -> "fnv1a64:<16 hex digits>", checked before running when present
  std::vector<std::pair<std::string, std::string>> checksums;
};

struct Manifest {
  int version = 1;
  std::vector<FixtureCase> cases;
};

struct Comparison {
  bool passed = false;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::string error;
};

struct CaseResult {
  std::string name;
  std::string op;
  Comparison cmp;
};

struct VerifyReport {
  std::vector<CaseResult> cases;

  int failures() const;
  bool all_passed() const { return failures() == 0; }
};

inline constexpr int kManifestVersion = 1;

/// Ops a manifest may name.
const std::vector<std::string>& fixture_ops();

/// Throws ConfigError on invalid JSON, missing/mistyped fields or unknown ops.
Manifest parse_manifest(const std::string& text);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::string file_checksum(const std::filesystem::path& path);

/// |got - want| <= atol + rtol * |want| element-wise, with matching dims.
Comparison compare(const StoredTensor& got, const StoredTensor& want, double rtol, double atol);
/// Single-tensor sets compare regardless of name; larger sets match by name.
Comparison compare(const TensorSet& got, const TensorSet& want, double rtol, double atol);

/// Runs `op` through the engine. Inputs ending in .mvitw are parameter sets
/// (block-relative names); everything else is a positional tensor.
TensorSet run_fixture_op(const std::string& op, const nlohmann::json& config,
                         const std::vector<std::filesystem::path>& inputs);

/// Loads `dir/manifest.json` and runs every case. Manifest problems throw
/// ConfigError; per-case failures (missing files, mismatches) are reported.
VerifyReport verify_golden(const std::filesystem::path& dir);

}  // namespace mvit
