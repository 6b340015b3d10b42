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

#include "mvit/blocks.hpp"

#include "mvit/errors.hpp"

namespace mvit {

Tensor ffn_forward(const Tensor& x, const FfnWeights& w) {
  if (x.shape().c != w.channels()) throw ShapeError("ffn_forward", "C", w.channels(), x.shape().c);
  if (w.fc2.spec.in_channels() != w.hidden()) {
    throw ShapeError("ffn_forward", "fc2 in_channels", w.hidden(), w.fc2.spec.in_channels());
  }
  if (w.fc2.spec.out_channels() != w.channels()) {
    throw ShapeError("ffn_forward", "fc2 out_channels", w.channels(), w.fc2.spec.out_channels());
  }
  Tensor h = w.norm ? w.fc1.forward(batch_norm2d(x, *w.norm)) : w.fc1.forward(x);
  return w.fc2.forward(gelu(h));
}

Tensor dwconv_mixer_forward(const Tensor& x, const ConvLayer& kernel,
                            const std::optional<BatchNormParams>& bn) {
  const ConvSpec& s = kernel.spec;
  if (x.shape().c != s.in_channels()) {
    throw ShapeError("dwconv_mixer_forward", "C", s.in_channels(), x.shape().c);
  }
  if (s.groups() != s.in_channels() || s.out_channels() != s.in_channels()) {
    throw ShapeError("dwconv_mixer_forward", "groups", s.in_channels(), s.groups());
  }
  if (s.stride() != 1) throw ShapeError("dwconv_mixer_forward", "stride", 1, s.stride());
  Tensor y = kernel.forward(x);
  return bn ? batch_norm2d(y, *bn) : y;
}

Tensor dwconv_mixer_forward(const Tensor& x, const DwMixer& mixer) {
  return dwconv_mixer_forward(x, mixer.dw.conv, mixer.dw.bn);
}

Tensor mixer_forward(const Tensor& x, const EncoderBlock& block) {
  if (const auto* dw = std::get_if<DwMixer>(&block.mixer)) return dwconv_mixer_forward(x, *dw);
  const auto& esha = std::get<EshaMixer>(block.mixer);
  return esha_forward(x, esha.weights, esha.config);
}

Tensor encoder_forward(const Tensor& x, const EncoderBlock& block) {
  if (x.shape().c != block.width()) throw ShapeError("encoder_forward", "C", block.width(), x.shape().c);
  Tensor mixed = add_scaled(x, mixer_forward(x, block), block.lambda_mixer);
  return add_scaled(mixed, ffn_forward(mixed, block.ffn), block.lambda_ffn);
}

Tensor patch_embed_forward(const Tensor& x, const PatchEmbed& pe) {
  if (x.shape().c != pe.in_channels()) {
    throw ShapeError("patch_embed_forward", "C", pe.in_channels(), x.shape().c);
  }
  Tensor pre = add_scaled(x, ffn_forward(x, pe.pre_ffn), pe.lambda_pre);
  Tensor y = pe.pw.forward(pe.dw.forward(pre));
  return add_scaled(y, ffn_forward(y, pe.post_ffn), pe.lambda_post);
}

Tensor stem_forward(const Tensor& img, const Stem& stem) {
  const int multiple = stem.reduction();
  if (img.shape().h % multiple != 0) throw ResolutionError("stem_forward", "H", multiple, img.shape().h);
  if (img.shape().w % multiple != 0) throw ResolutionError("stem_forward", "W", multiple, img.shape().w);
  if (stem.layers.empty()) return img;
  if (img.shape().c != stem.layers.front().conv.spec.in_channels()) {
    throw ShapeError("stem_forward", "C", stem.layers.front().conv.spec.in_channels(), img.shape().c);
  }
  Tensor x = img;
  for (const ConvBn& layer : stem.layers) x = gelu(layer.forward(x));
  return x;
}

Matrix classifier_head(const Tensor& x, const Matrix& fc_weight,
                       std::span<const float> fc_bias, int num_classes) {
  const Shape& s = x.shape();
  if (fc_weight.rows != num_classes) throw ShapeError("classifier_head", "fc rows", num_classes, fc_weight.rows);
  if (fc_weight.cols != s.c) throw ShapeError("classifier_head", "fc cols", s.c, fc_weight.cols);
  if (fc_bias.size() != static_cast<std::size_t>(num_classes)) {
    throw ShapeError("classifier_head", "fc bias", num_classes, fc_bias.size());
  }
  const Tensor pooled = global_avg_pool(x);
  Matrix logits(s.n, num_classes);
  for (int n = 0; n < s.n; ++n) {
    const float* feat = pooled.plane(n, 0);
    for (int j = 0; j < num_classes; ++j) {
      const float* row = fc_weight.data.data() + static_cast<std::size_t>(j) * s.c;
      double acc = 0.0;
      for (int c = 0; c < s.c; ++c) acc += static_cast<double>(row[c]) * feat[c];
      logits(n, j) = static_cast<float>(acc + fc_bias[j]);
    }
  }
  return logits;
}

Matrix classifier_head(const Tensor& x, const ClassifierHead& head) {
  return classifier_head(x, head.weight, head.bias, head.classes());
}

}  // namespace mvit
