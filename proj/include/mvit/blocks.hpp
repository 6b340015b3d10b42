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

#include <optional>
#include <variant>
#include <vector>

#include "mvit/esha.hpp"
#include "mvit/layers.hpp"
#include "mvit/tensor.hpp"

namespace mvit {

/// Channel MLP: Norm -> 1x1 (C -> alpha*C) -> GELU -> 1x1 (alpha*C -> C).
/// `norm` is absent once folded into fc1.
struct FfnWeights {
  std::optional<BatchNormParams> norm;
  ConvLayer fc1;
  ConvLayer fc2;

  int channels() const { return fc1.spec.in_channels(); }
  int hidden() const { return fc1.spec.out_channels(); }
};

/// Depthwise 3x3 spatial mixer used by the convolutional stages.
struct DwMixer {
  ConvBn dw;
};

struct EshaMixer {
  EshaConfig config;
  EshaWeights weights;
};

/// X' = X + l_mixer * Mixer(X);  X'' = X' + l_ffn * FFN(X').
struct EncoderBlock {
  std::variant<DwMixer, EshaMixer> mixer;
  FfnWeights ffn;
  std::vector<float> lambda_mixer;
  std::vector<float> lambda_ffn;

  int width() const { return ffn.channels(); }
};

/// Stride-2 downsampling between stages: a residual FFN at the input width,
/// a separable conv (depthwise 3x3 s2 + BN, pointwise + BN) and a residual
/// FFN at the output width.
struct PatchEmbed {
  FfnWeights pre_ffn;
  std::vector<float> lambda_pre;
  ConvBn dw;
  ConvBn pw;
  FfnWeights post_ffn;
  std::vector<float> lambda_post;

  int in_channels() const { return dw.conv.spec.in_channels(); }
  int out_channels() const { return pw.conv.spec.out_channels(); }
};

/// Stack of stride-2 3x3 conv + BN + GELU layers.
struct Stem {
  std::vector<ConvBn> layers;

  int reduction() const { return 1 << layers.size(); }
  int out_channels() const { return layers.back().conv.spec.out_channels(); }
};

struct ClassifierHead {
  Matrix weight;  // classes x C
  std::vector<float> bias;

  int classes() const { return weight.rows; }
};

Tensor ffn_forward(const Tensor& x, const FfnWeights& w);
Tensor dwconv_mixer_forward(const Tensor& x, const DwMixer& mixer);
Tensor dwconv_mixer_forward(const Tensor& x, const ConvLayer& kernel,
                            const std::optional<BatchNormParams>& bn);
Tensor mixer_forward(const Tensor& x, const EncoderBlock& block);
Tensor encoder_forward(const Tensor& x, const EncoderBlock& block);
Tensor patch_embed_forward(const Tensor& x, const PatchEmbed& pe);
Tensor stem_forward(const Tensor& img, const Stem& stem);

/// Global average pool then a biased linear layer. Returns N x classes.
Matrix classifier_head(const Tensor& x, const ClassifierHead& head);
Matrix classifier_head(const Tensor& x, const Matrix& fc_weight,
                       std::span<const float> fc_bias, int num_classes);

}  // namespace mvit
