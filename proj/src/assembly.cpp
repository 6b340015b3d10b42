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

#include "mvit/assembly.hpp"

#include <cmath>

#include "mvit/errors.hpp"

namespace mvit {

namespace names {
std::string stem_conv(int layer) { return "stem." + std::to_string(layer) + ".conv"; }
std::string stem_bn(int layer) { return "stem." + std::to_string(layer) + ".bn"; }
std::string block(int stage, int index) {
  return "stage" + std::to_string(stage) + ".block" + std::to_string(index);
}
std::string embed(int stage) { return "stage" + std::to_string(stage) + ".embed"; }
}  // namespace names

std::string join(const std::string& prefix, const std::string& leaf) {
  return prefix.empty() ? leaf : prefix + "." + leaf;
}

TruncatedNormal::TruncatedNormal(std::uint64_t seed, double stddev, double bound)
    : gen_(seed), stddev_(stddev), bound_(bound) {}

double TruncatedNormal::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method over 53-bit uniforms.
  constexpr double kScale = 1.0 / 4503599627370496.0;  // 2^-52
  double u = 0.0;
  double v = 0.0;
  double r2 = 0.0;
  do {
    u = static_cast<double>(gen_() >> 11) * kScale - 1.0;
    v = static_cast<double>(gen_() >> 11) * kScale - 1.0;
    r2 = u * u + v * v;
  } while (r2 >= 1.0 || r2 == 0.0);
  const double f = std::sqrt(-2.0 * std::log(r2) / r2);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

float TruncatedNormal::operator()() {
  double z = standard_normal();
  while (std::fabs(z) > bound_) z = standard_normal();
  return static_cast<float>(z * stddev_);
}

void ParamWriter::conv(const std::string& prefix, const ConvSpec& spec) {
  const Shape ws = spec.weight_shape();
  StoredTensor w;
  w.dims = {static_cast<std::uint32_t>(ws.n), static_cast<std::uint32_t>(ws.c),
            static_cast<std::uint32_t>(ws.h), static_cast<std::uint32_t>(ws.w)};
  w.values.resize(ws.elements());
  for (float& v : w.values) v = init_();
  out_.insert(join(prefix, "weight"), std::move(w));
  if (spec.has_bias()) {
    out_.insert(join(prefix, "bias"), StoredTensor::vector(std::vector<float>(spec.out_channels(), 0.0f)));
  }
}

void ParamWriter::batch_norm(const std::string& prefix, int channels) {
  const auto c = static_cast<std::size_t>(channels);
  out_.insert(join(prefix, "gamma"), StoredTensor::vector(std::vector<float>(c, 1.0f)));
  out_.insert(join(prefix, "beta"), StoredTensor::vector(std::vector<float>(c, 0.0f)));
  out_.insert(join(prefix, "mean"), StoredTensor::vector(std::vector<float>(c, 0.0f)));
  out_.insert(join(prefix, "var"), StoredTensor::vector(std::vector<float>(c, 1.0f)));
}

void ParamWriter::layer_scale(const std::string& name, int channels) {
  out_.insert(name, StoredTensor::vector(std::vector<float>(channels, 1.0f)));
}

void ParamWriter::linear(const std::string& prefix, int out_features, int in_features) {
  StoredTensor w;
  w.dims = {static_cast<std::uint32_t>(out_features), static_cast<std::uint32_t>(in_features)};
  w.values.resize(static_cast<std::size_t>(out_features) * in_features);
  for (float& v : w.values) v = init_();
  out_.insert(join(prefix, "weight"), std::move(w));
  out_.insert(join(prefix, "bias"), StoredTensor::vector(std::vector<float>(out_features, 0.0f)));
}

const StoredTensor& ParamReader::take(const std::string& name) {
  const StoredTensor* t = set_.find(name);
  if (!t) throw StructureError("missing tensor '" + name + "'");
  used_.insert(name);
  return *t;
}

Tensor ParamReader::tensor(const std::string& name, const Shape& expected) {
  const StoredTensor& t = take(name);
  const std::uint32_t want[4] = {static_cast<std::uint32_t>(expected.n), static_cast<std::uint32_t>(expected.c),
                                 static_cast<std::uint32_t>(expected.h), static_cast<std::uint32_t>(expected.w)};
  if (t.rank() != 4) throw ShapeError(name, "rank", 4, t.rank());
  const char* labels[4] = {"dim0", "dim1", "dim2", "dim3"};
  for (int i = 0; i < 4; ++i) {
    if (t.dims[i] != want[i]) throw ShapeError(name, labels[i], want[i], t.dims[i]);
  }
  return Tensor(expected, t.values);
}

std::vector<float> ParamReader::vector(const std::string& name, int length) {
  const StoredTensor& t = take(name);
  if (t.rank() != 1) throw ShapeError(name, "rank", 1, t.rank());
  if (t.dims[0] != static_cast<std::uint32_t>(length)) throw ShapeError(name, "length", length, t.dims[0]);
  return t.values;
}

Matrix ParamReader::matrix(const std::string& name, int rows, int cols) {
  const StoredTensor& t = take(name);
  if (t.rank() != 2) throw ShapeError(name, "rank", 2, t.rank());
  if (t.dims[0] != static_cast<std::uint32_t>(rows)) throw ShapeError(name, "rows", rows, t.dims[0]);
  if (t.dims[1] != static_cast<std::uint32_t>(cols)) throw ShapeError(name, "cols", cols, t.dims[1]);
  Matrix m(rows, cols);
  m.data = t.values;
  return m;
}

BatchNormParams ParamReader::batch_norm(const std::string& prefix, int channels, double eps) {
  BatchNormParams bn;
  bn.gamma = vector(join(prefix, "gamma"), channels);
  bn.beta = vector(join(prefix, "beta"), channels);
  bn.mean = vector(join(prefix, "mean"), channels);
  bn.var = vector(join(prefix, "var"), channels);
  bn.eps = static_cast<float>(eps);
  return bn;
}

ConvLayer ParamReader::conv(const std::string& prefix, const ConvSpec& spec) {
  ConvLayer layer{spec, tensor(join(prefix, "weight"), spec.weight_shape()), {}};
  if (spec.has_bias()) layer.bias = vector(join(prefix, "bias"), spec.out_channels());
  return layer;
}

void ParamReader::finish() const {
  std::string extra;
  std::size_t count = 0;
  for (const auto& [name, t] : set_) {
    if (used_.count(name)) continue;
    if (count++ < 5) extra += (extra.empty() ? "" : ", ") + name;
  }
  if (count > 0) {
    throw StructureError(std::to_string(count) + " unexpected tensor(s) for this config: " + extra +
                         (count > 5 ? ", ..." : ""));
  }
}

void declare_conv_bn(ParamWriter& w, const std::string& conv, const std::string& bn,
                     const ConvSpec& spec) {
  w.conv(conv, spec);
  w.batch_norm(bn, spec.out_channels());
}

ConvBn load_conv_bn(ParamReader& r, const std::string& conv, const std::string& bn,
                    const ConvSpec& spec, const UnitOptions& opt) {
  if (opt.fused) return ConvBn{r.conv(conv, spec.with_bias(true)), std::nullopt};
  ConvBn unit{r.conv(conv, spec), std::nullopt};
  unit.bn = r.batch_norm(bn, spec.out_channels(), opt.eps);
  return unit;
}

namespace {
ConvSpec ffn_fc1_spec(int c, int e) { return ConvSpec(c, e * c, 1, 1, 0, 1, true); }
ConvSpec ffn_fc2_spec(int c, int e) { return ConvSpec(e * c, c, 1, 1, 0, 1, true); }
}  // namespace

void declare_ffn(ParamWriter& w, const std::string& prefix, int channels, int expansion) {
  w.batch_norm(join(prefix, "norm"), channels);
  w.conv(join(prefix, "fc1"), ffn_fc1_spec(channels, expansion));
  w.conv(join(prefix, "fc2"), ffn_fc2_spec(channels, expansion));
}

FfnWeights load_ffn(ParamReader& r, const std::string& prefix, int channels, int expansion,
                    const UnitOptions& opt) {
  FfnWeights f{std::nullopt, r.conv(join(prefix, "fc1"), ffn_fc1_spec(channels, expansion)),
               r.conv(join(prefix, "fc2"), ffn_fc2_spec(channels, expansion))};
  if (!opt.fused) f.norm = r.batch_norm(join(prefix, "norm"), channels, opt.eps);
  return f;
}

void declare_esha(ParamWriter& w, const std::string& prefix, const EshaConfig& cfg) {
  cfg.validate();
  const std::string ip = join(prefix, "w_ip");
  declare_conv_bn(w, ip, ip, esha_input_spec(cfg));
  if (cfg.spatial_reduction > 1) {
    w.conv(join(prefix, "sr_k"), esha_reduce_spec(cfg.key_dim, cfg.spatial_reduction));
    w.conv(join(prefix, "sr_v"), esha_reduce_spec(cfg.value_dim(), cfg.spatial_reduction));
  }
  const std::string op = join(prefix, "w_op");
  declare_conv_bn(w, op, op, esha_output_spec(cfg));
}

EshaWeights load_esha(ParamReader& r, const std::string& prefix, const EshaConfig& cfg,
                      const UnitOptions& opt) {
  cfg.validate();
  const std::string ip = join(prefix, "w_ip");
  const std::string op = join(prefix, "w_op");
  EshaWeights w{load_conv_bn(r, ip, ip, esha_input_spec(cfg), opt), std::nullopt, std::nullopt,
                load_conv_bn(r, op, op, esha_output_spec(cfg), opt)};
  if (cfg.spatial_reduction > 1) {
    w.sr_k = r.conv(join(prefix, "sr_k"), esha_reduce_spec(cfg.key_dim, cfg.spatial_reduction));
    w.sr_v = r.conv(join(prefix, "sr_v"), esha_reduce_spec(cfg.value_dim(), cfg.spatial_reduction));
  }
  return w;
}

ConvSpec dw_mixer_spec(int channels) { return ConvSpec(channels, channels, 3, 1, 1, channels, false); }

void declare_dw_mixer(ParamWriter& w, const std::string& prefix, int channels) {
  const std::string dw = join(prefix, "dw");
  declare_conv_bn(w, dw, dw, dw_mixer_spec(channels));
}

DwMixer load_dw_mixer(ParamReader& r, const std::string& prefix, int channels,
                      const UnitOptions& opt) {
  const std::string dw = join(prefix, "dw");
  return DwMixer{load_conv_bn(r, dw, dw, dw_mixer_spec(channels), opt)};
}

void declare_encoder(ParamWriter& w, const std::string& prefix, const StageConfig& stage,
                     int expansion) {
  const std::string mixer = join(prefix, "mixer");
  if (stage.mixer == MixerKind::kEsha) {
    declare_esha(w, mixer, stage.esha());
  } else {
    declare_dw_mixer(w, mixer, stage.width);
  }
  declare_ffn(w, join(prefix, "ffn"), stage.width, expansion);
  w.layer_scale(join(prefix, "lambda_mixer"), stage.width);
  w.layer_scale(join(prefix, "lambda_ffn"), stage.width);
}

EncoderBlock load_encoder(ParamReader& r, const std::string& prefix, const StageConfig& stage,
                          int expansion, const UnitOptions& opt) {
  const std::string mixer = join(prefix, "mixer");
  std::variant<DwMixer, EshaMixer> m =
      stage.mixer == MixerKind::kEsha
          ? std::variant<DwMixer, EshaMixer>(EshaMixer{stage.esha(), load_esha(r, mixer, stage.esha(), opt)})
          : std::variant<DwMixer, EshaMixer>(load_dw_mixer(r, mixer, stage.width, opt));
  EncoderBlock block{std::move(m), load_ffn(r, join(prefix, "ffn"), stage.width, expansion, opt),
                     r.vector(join(prefix, "lambda_mixer"), stage.width),
                     r.vector(join(prefix, "lambda_ffn"), stage.width)};
  return block;
}

ConvSpec embed_dw_spec(int in_channels) {
  return ConvSpec(in_channels, in_channels, 3, 2, 1, in_channels, false);
}

ConvSpec embed_pw_spec(int in_channels, int out_channels) {
  return ConvSpec(in_channels, out_channels, 1, 1, 0, 1, false);
}

void declare_patch_embed(ParamWriter& w, const std::string& prefix, int in_channels,
                         int out_channels, int expansion) {
  declare_ffn(w, join(prefix, "pre_ffn"), in_channels, expansion);
  w.layer_scale(join(prefix, "lambda_pre"), in_channels);
  const std::string dw = join(prefix, "dw");
  const std::string pw = join(prefix, "pw");
  declare_conv_bn(w, dw, dw, embed_dw_spec(in_channels));
  declare_conv_bn(w, pw, pw, embed_pw_spec(in_channels, out_channels));
  declare_ffn(w, join(prefix, "post_ffn"), out_channels, expansion);
  w.layer_scale(join(prefix, "lambda_post"), out_channels);
}

PatchEmbed load_patch_embed(ParamReader& r, const std::string& prefix, int in_channels,
                            int out_channels, int expansion, const UnitOptions& opt) {
  const std::string dw = join(prefix, "dw");
  const std::string pw = join(prefix, "pw");
  PatchEmbed pe{load_ffn(r, join(prefix, "pre_ffn"), in_channels, expansion, opt),
                r.vector(join(prefix, "lambda_pre"), in_channels),
                load_conv_bn(r, dw, dw, embed_dw_spec(in_channels), opt),
                load_conv_bn(r, pw, pw, embed_pw_spec(in_channels, out_channels), opt),
                load_ffn(r, join(prefix, "post_ffn"), out_channels, expansion, opt),
                r.vector(join(prefix, "lambda_post"), out_channels)};
  return pe;
}

ConvSpec stem_spec(int in_channels, int out_channels) {
  return ConvSpec(in_channels, out_channels, 3, 2, 1, 1, false);
}

void declare_stem(ParamWriter& w, const std::vector<int>& ramp, int in_channels) {
  int c = in_channels;
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    const int layer = static_cast<int>(i);
    declare_conv_bn(w, names::stem_conv(layer), names::stem_bn(layer), stem_spec(c, ramp[i]));
    c = ramp[i];
  }
}

Stem load_stem(ParamReader& r, const std::vector<int>& ramp, const UnitOptions& opt,
               int in_channels) {
  Stem stem;
  int c = in_channels;
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    const int layer = static_cast<int>(i);
    stem.layers.push_back(
        load_conv_bn(r, names::stem_conv(layer), names::stem_bn(layer), stem_spec(c, ramp[i]), opt));
    c = ramp[i];
  }
  return stem;
}

void declare_head(ParamWriter& w, const std::string& prefix, int classes, int channels) {
  w.linear(prefix, classes, channels);
}

ClassifierHead load_head(ParamReader& r, const std::string& prefix, int classes, int channels) {
  return ClassifierHead{r.matrix(join(prefix, "weight"), classes, channels),
                        r.vector(join(prefix, "bias"), classes)};
}

}  // namespace mvit
