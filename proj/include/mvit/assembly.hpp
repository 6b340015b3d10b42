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
#include <random>
#include <set>
#include <string>

#include "mvit/blocks.hpp"
#include "mvit/model_config.hpp"
#include "mvit/tensor_set.hpp"

namespace mvit {

/// Canonical layer names shared by the builder, loader, fusion pass and the
/// fixture generator.
namespace names {
std::string stem_conv(int layer);  // stem.<i>.conv
std::string stem_bn(int layer);    // stem.<i>.bn
std::string block(int stage, int index);  // stage<s>.block<i>, stage 1-based
std::string embed(int stage);             // stage<s>.embed
inline constexpr const char* kHeadFc = "head.fc";
}  // namespace names

/// N(0, std^2) truncated to +-bound*std by rejection. Polar-method normals over
/// mt19937_64 so the stream is identical on every standard library.
class TruncatedNormal {
 public:
  explicit TruncatedNormal(std::uint64_t seed, double stddev = 0.02, double bound = 2.0);
  float operator()();

 private:
  double standard_normal();

  std::mt19937_64 gen_;
  double stddev_;
  double bound_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Appends freshly initialised parameters: kernels from the truncated
/// normal, biases zero, BN identity statistics, layer scales one.
class ParamWriter {
 public:
  ParamWriter(TensorSet& out, TruncatedNormal& init) : out_(out), init_(init) {}

  void conv(const std::string& prefix, const ConvSpec& spec);
  void batch_norm(const std::string& prefix, int channels);
  void layer_scale(const std::string& name, int channels);
  void linear(const std::string& prefix, int out_features, int in_features);

 private:
  TensorSet& out_;
  TruncatedNormal& init_;
};

/// Pulls typed parameters out of a flat set, checking each extent and
/// recording which names were used.
class ParamReader {
 public:
  explicit ParamReader(const TensorSet& set) : set_(set) {}

  bool has(const std::string& name) const { return set_.contains(name); }
  Tensor tensor(const std::string& name, const Shape& expected);
  std::vector<float> vector(const std::string& name, int length);
  Matrix matrix(const std::string& name, int rows, int cols);
  BatchNormParams batch_norm(const std::string& prefix, int channels, double eps);
  ConvLayer conv(const std::string& prefix, const ConvSpec& spec);

  /// Throws StructureError naming any tensor that was never read.
  void finish() const;

 private:
  const StoredTensor& take(const std::string& name);

  const TensorSet& set_;
  std::set<std::string> used_;
};

struct UnitOptions {
  bool fused = false;
  double eps = 1e-5;
};

// Block-level layout. `prefix` is prepended with a '.' unless empty.

void declare_conv_bn(ParamWriter& w, const std::string& conv, const std::string& bn,
                     const ConvSpec& spec);
ConvBn load_conv_bn(ParamReader& r, const std::string& conv, const std::string& bn,
                    const ConvSpec& spec, const UnitOptions& opt);

void declare_ffn(ParamWriter& w, const std::string& prefix, int channels, int expansion);
FfnWeights load_ffn(ParamReader& r, const std::string& prefix, int channels, int expansion,
                    const UnitOptions& opt);

void declare_esha(ParamWriter& w, const std::string& prefix, const EshaConfig& cfg);
EshaWeights load_esha(ParamReader& r, const std::string& prefix, const EshaConfig& cfg,
                      const UnitOptions& opt);

ConvSpec dw_mixer_spec(int channels);
void declare_dw_mixer(ParamWriter& w, const std::string& prefix, int channels);
DwMixer load_dw_mixer(ParamReader& r, const std::string& prefix, int channels,
                      const UnitOptions& opt);

void declare_encoder(ParamWriter& w, const std::string& prefix, const StageConfig& stage,
                     int expansion);
EncoderBlock load_encoder(ParamReader& r, const std::string& prefix, const StageConfig& stage,
                          int expansion, const UnitOptions& opt);

ConvSpec embed_dw_spec(int in_channels);
ConvSpec embed_pw_spec(int in_channels, int out_channels);
void declare_patch_embed(ParamWriter& w, const std::string& prefix, int in_channels,
                         int out_channels, int expansion);
PatchEmbed load_patch_embed(ParamReader& r, const std::string& prefix, int in_channels,
                            int out_channels, int expansion, const UnitOptions& opt);

ConvSpec stem_spec(int in_channels, int out_channels);
void declare_stem(ParamWriter& w, const std::vector<int>& ramp, int in_channels = 3);
Stem load_stem(ParamReader& r, const std::vector<int>& ramp, const UnitOptions& opt,
               int in_channels = 3);

void declare_head(ParamWriter& w, const std::string& prefix, int classes, int channels);
ClassifierHead load_head(ParamReader& r, const std::string& prefix, int classes, int channels);

std::string join(const std::string& prefix, const std::string& leaf);

}  // namespace mvit
