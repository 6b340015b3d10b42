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

#include "mvit/fusion.hpp"

#include <cmath>
#include <map>
#include <set>

#include "mvit/assembly.hpp"
#include "mvit/errors.hpp"

namespace mvit {

namespace {

std::vector<double> bn_scale(const BatchNormParams& bn) {
  std::vector<double> s(bn.gamma.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    s[c] = static_cast<double>(bn.gamma[c]) / std::sqrt(static_cast<double>(bn.var[c]) + bn.eps);
  }
  return s;
}

void check_norm(const char* op, const BatchNormParams& bn, int channels) {
  if (bn.gamma.size() != static_cast<std::size_t>(channels) || bn.beta.size() != bn.gamma.size() ||
      bn.mean.size() != bn.gamma.size() || bn.var.size() != bn.gamma.size()) {
    throw ShapeError(op, "norm channels", channels, bn.gamma.size());
  }
}

}  // namespace

ConvLayer fold_batchnorm(const ConvLayer& conv, const BatchNormParams& bn) {
  const int out = conv.spec.out_channels();
  check_norm("fold_batchnorm", bn, out);
  const std::vector<double> s = bn_scale(bn);
  ConvLayer fused{conv.spec.with_bias(true), conv.weight, std::vector<float>(out)};
  const std::size_t per_out = conv.weight.size() / out;
  auto w = fused.weight.data();
  for (int o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < per_out; ++i) {
      float& v = w[o * per_out + i];
      v = static_cast<float>(v * s[o]);
    }
    const double b = conv.bias.empty() ? 0.0 : conv.bias[o];
    fused.bias[o] = static_cast<float>((b - bn.mean[o]) * s[o] + bn.beta[o]);
  }
  return fused;
}

ConvLayer fold_input_batchnorm(const BatchNormParams& bn, const ConvLayer& conv) {
  const ConvSpec& spec = conv.spec;
  if (spec.kernel_h() != 1 || spec.kernel_w() != 1 || spec.padding() != 0 || spec.groups() != 1) {
    throw ConfigError("fold_input_batchnorm: only ungrouped 1x1 convs without padding fold exactly");
  }
  const int in = spec.in_channels();
  const int out = spec.out_channels();
  check_norm("fold_input_batchnorm", bn, in);
  const std::vector<double> s = bn_scale(bn);
  std::vector<double> shift(in);
  for (int i = 0; i < in; ++i) shift[i] = bn.beta[i] - bn.mean[i] * s[i];

  ConvLayer fused{spec.with_bias(true), conv.weight, std::vector<float>(out)};
  auto w = fused.weight.data();
  for (int o = 0; o < out; ++o) {
    double b = conv.bias.empty() ? 0.0 : conv.bias[o];
    for (int i = 0; i < in; ++i) {
      const double orig = conv.weight.data()[static_cast<std::size_t>(o) * in + i];
      b += orig * shift[i];
      w[static_cast<std::size_t>(o) * in + i] = static_cast<float>(orig * s[i]);
    }
    fused.bias[o] = static_cast<float>(b);
  }
  return fused;
}

std::vector<FusionSite> fusion_sites(const ModelConfig& cfg) {
  using Order = FusionSite::Order;
  std::vector<FusionSite> sites;
  auto post = [&](const std::string& conv, const std::string& norm, const ConvSpec& spec) {
    sites.push_back(FusionSite{Order::kConvThenNorm, conv, norm, spec});
  };
  auto ffn = [&](const std::string& prefix, int c) {
    sites.push_back(FusionSite{Order::kNormThenConv, join(prefix, "fc1"), join(prefix, "norm"),
                               ConvSpec(c, cfg.ffn_expansion * c, 1, 1, 0, 1, true)});
  };

  int cin = 3;
  for (std::size_t i = 0; i < cfg.stem_ramp.size(); ++i) {
    const int layer = static_cast<int>(i);
    post(names::stem_conv(layer), names::stem_bn(layer), stem_spec(cin, cfg.stem_ramp[i]));
    cin = cfg.stem_ramp[i];
  }
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const int stage = static_cast<int>(s) + 1;
    const StageConfig& st = cfg.stages[s];
    if (s > 0) {
      const int prev = cfg.stages[s - 1].width;
      const std::string e = names::embed(stage);
      ffn(join(e, "pre_ffn"), prev);
      post(join(e, "dw"), join(e, "dw"), embed_dw_spec(prev));
      post(join(e, "pw"), join(e, "pw"), embed_pw_spec(prev, st.width));
      ffn(join(e, "post_ffn"), st.width);
    }
    for (int b = 0; b < st.depth; ++b) {
      const std::string block = names::block(stage, b);
      const std::string mixer = join(block, "mixer");
      if (st.mixer == MixerKind::kEsha) {
        const EshaConfig e = st.esha();
        post(join(mixer, "w_ip"), join(mixer, "w_ip"), esha_input_spec(e));
        post(join(mixer, "w_op"), join(mixer, "w_op"), esha_output_spec(e));
      } else {
        post(join(mixer, "dw"), join(mixer, "dw"), dw_mixer_spec(st.width));
      }
      ffn(join(block, "ffn"), st.width);
    }
  }
  return sites;
}

Model fuse_batchnorm(const Model& model) {
  if (model.config.fused) {
    for (const auto& [name, t] : model.weights) {
      if (is_batchnorm_leaf(name)) throw StructureError("fused model still holds BN tensor '" + name + "'");
    }
    return model;
  }

  // Folded replacements keyed by tensor name; BN leaves are dropped.
  std::map<std::string, StoredTensor> replaced;
  std::set<std::string> consumed_norms;
  for (const FusionSite& site : fusion_sites(model.config)) {
    ParamReader r(model.weights);
    const ConvLayer conv = r.conv(site.conv, site.spec);
    const BatchNormParams bn =
        r.batch_norm(site.norm, site.order == FusionSite::Order::kConvThenNorm
                                    ? site.spec.out_channels()
                                    : site.spec.in_channels(),
                     model.config.bn_eps);
    const ConvLayer fused = site.order == FusionSite::Order::kConvThenNorm
                                ? fold_batchnorm(conv, bn)
                                : fold_input_batchnorm(bn, conv);
    replaced[join(site.conv, "weight")] = StoredTensor::from_tensor(fused.weight, 4);
    replaced[join(site.conv, "bias")] = StoredTensor::vector(fused.bias);
    for (const char* leaf : {"gamma", "beta", "mean", "var"}) consumed_norms.insert(join(site.norm, leaf));
  }

  Model out{model.config, {}};
  out.config.fused = true;
  for (const auto& [name, t] : model.weights) {
    if (consumed_norms.count(name)) continue;
    if (is_batchnorm_leaf(name)) throw StructureError("orphan batch norm tensor '" + name + "'");
    if (auto it = replaced.find(name); it != replaced.end()) {
      out.weights.insert(name, it->second);
      replaced.erase(it);
      // The bias of a previously bias-free conv goes right after its weight.
      if (name.ends_with(".weight")) {
        const std::string bias = name.substr(0, name.size() - 6) + "bias";
        if (!model.weights.contains(bias)) {
          out.weights.insert(bias, replaced.at(bias));
          replaced.erase(bias);
        }
      }
      continue;
    }
    out.weights.insert(name, t);
  }
  if (!replaced.empty()) {
    throw StructureError("fusion produced tensor '" + replaced.begin()->first + "' with no source");
  }
  return out;
}

}  // namespace mvit
