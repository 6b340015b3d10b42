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

#include "mvit/esha.hpp"

#include <array>
#include <cmath>

#include "mvit/errors.hpp"

namespace mvit {

int EshaConfig::value_dim() const {
  return static_cast<int>(std::lround(ratio * channels));
}

void EshaConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("esha: " + what); };
  if (channels < 1) fail("channels must be >= 1");
  if (query_dim != key_dim) {
    fail("query_dim " + std::to_string(query_dim) + " != key_dim " + std::to_string(key_dim));
  }
  if (query_dim < 1 || query_dim > kMaxQueryKeyDim) {
    fail("query/key dim must be in [1, 16], got " + std::to_string(query_dim));
  }
  if (!(ratio > 0.0 && ratio < 1.0)) fail("ratio must be in (0, 1)");
  if (value_dim() < 1 || value_dim() >= channels) {
    fail("value_dim " + std::to_string(value_dim()) + " leaves no value or untouched channels");
  }
  if (groups < 1) fail("groups must be >= 1");
  if (channels % groups != 0) {
    fail("channels " + std::to_string(channels) + " not divisible by groups " +
         std::to_string(groups));
  }
  if (proj_out() % groups != 0) {
    fail("projection width " + std::to_string(proj_out()) + " not divisible by groups " +
         std::to_string(groups));
  }
  if (spatial_reduction != 1 && spatial_reduction != 2) {
    fail("spatial reduction must be 1 or 2, got " + std::to_string(spatial_reduction));
  }
}

ConvSpec esha_input_spec(const EshaConfig& cfg) {
  return ConvSpec(cfg.channels, cfg.proj_out(), 3, 1, 1, cfg.groups, true);
}

ConvSpec esha_reduce_spec(int channels, int sr) {
  return ConvSpec(channels, channels, 3, sr, 1, channels, true);
}

ConvSpec esha_output_spec(const EshaConfig& cfg) {
  return ConvSpec(cfg.channels, cfg.channels, 1, 1, 0, 1, true);
}

namespace {

void check_conv(const char* what, const ConvLayer& layer, const ConvSpec& want) {
  const ConvSpec& got = layer.spec;
  const std::string op = std::string("esha.") + what;
  if (got.in_channels() != want.in_channels()) throw ShapeError(op, "in_channels", want.in_channels(), got.in_channels());
  if (got.out_channels() != want.out_channels()) throw ShapeError(op, "out_channels", want.out_channels(), got.out_channels());
  if (got.kernel_h() != want.kernel_h()) throw ShapeError(op, "k_h", want.kernel_h(), got.kernel_h());
  if (got.kernel_w() != want.kernel_w()) throw ShapeError(op, "k_w", want.kernel_w(), got.kernel_w());
  if (got.stride() != want.stride()) throw ShapeError(op, "stride", want.stride(), got.stride());
  if (got.padding() != want.padding()) throw ShapeError(op, "padding", want.padding(), got.padding());
  if (got.groups() != want.groups()) throw ShapeError(op, "groups", want.groups(), got.groups());
  if (!(layer.weight.shape() == got.weight_shape())) {
    throw ShapeError(op, "weight elements", got.weight_shape().elements(), layer.weight.size());
  }
}

}  // namespace

void EshaWeights::validate(const EshaConfig& cfg) const {
  cfg.validate();
  check_conv("w_ip", w_ip.conv, esha_input_spec(cfg));
  check_conv("w_op", w_op.conv, esha_output_spec(cfg));
  if (cfg.spatial_reduction > 1) {
    if (!sr_k || !sr_v) throw ConfigError("esha: SR > 1 requires sr_k and sr_v kernels");
    check_conv("sr_k", *sr_k, esha_reduce_spec(cfg.key_dim, cfg.spatial_reduction));
    check_conv("sr_v", *sr_v, esha_reduce_spec(cfg.value_dim(), cfg.spatial_reduction));
  }
}

EshaProjection esha_project(const Tensor& x, const EshaWeights& w, const EshaConfig& cfg) {
  if (x.shape().c != cfg.channels) throw ShapeError("esha_project", "C", cfg.channels, x.shape().c);
  Tensor projected = w.w_ip.forward(x);
  const std::array<int, 4> sizes = {cfg.query_dim, cfg.key_dim, cfg.value_dim(),
                                    cfg.untouched_dim()};
  std::vector<Tensor> parts = channel_split(projected, sizes);
  return EshaProjection{std::move(parts[0]), std::move(parts[1]), std::move(parts[2]),
                        std::move(parts[3])};
}

Tensor spatial_reduce(const Tensor& t, const std::optional<ConvLayer>& kernel, int sr) {
  if (sr == 1) return t;
  if (sr != 2) throw ConfigError("spatial_reduce: SR must be 1 or 2, got " + std::to_string(sr));
  if (!kernel) throw ConfigError("spatial_reduce: SR 2 requires a reduction kernel");
  return kernel->forward(t);
}

Matrix esha_attention_map(const Tensor& q, const Tensor& k, int n) {
  if (q.shape().c != k.shape().c) {
    throw ConfigError("esha_attend: query dim " + std::to_string(q.shape().c) +
                      " != key dim " + std::to_string(k.shape().c));
  }
  Matrix scores = matmul_transposed(to_tokens(q, n), to_tokens(k, n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.shape().c));
  for (float& s : scores.data) s = static_cast<float>(s * scale);
  return softmax_lastdim(scores);
}

Tensor esha_attend(const Tensor& q, const Tensor& k, const Tensor& v, const EshaConfig& cfg) {
  if (cfg.query_dim != cfg.key_dim) {
    throw ConfigError("esha_attend: query_dim " + std::to_string(cfg.query_dim) +
                      " != key_dim " + std::to_string(cfg.key_dim));
  }
  if (q.shape().c != cfg.query_dim) throw ShapeError("esha_attend", "Q channels", cfg.query_dim, q.shape().c);
  if (k.shape().c != cfg.key_dim) throw ShapeError("esha_attend", "K channels", cfg.key_dim, k.shape().c);
  if (k.shape().n != q.shape().n) throw ShapeError("esha_attend", "K batch", q.shape().n, k.shape().n);
  if (v.shape().n != q.shape().n) throw ShapeError("esha_attend", "V batch", q.shape().n, v.shape().n);
  if (v.shape().h != k.shape().h) throw ShapeError("esha_attend", "V height", k.shape().h, v.shape().h);
  if (v.shape().w != k.shape().w) throw ShapeError("esha_attend", "V width", k.shape().w, v.shape().w);

  const Shape& qs = q.shape();
  Tensor out(Shape{qs.n, v.shape().c, qs.h, qs.w});
  for (int n = 0; n < qs.n; ++n) {
    const Matrix attn = esha_attention_map(q, k, n);
    from_tokens(matmul(attn, to_tokens(v, n)), out, n);
  }
  return out;
}

Tensor esha_forward(const Tensor& x, const EshaWeights& w, const EshaConfig& cfg) {
  EshaProjection p = esha_project(x, w, cfg);
  const Tensor k = spatial_reduce(p.k, w.sr_k, cfg.spatial_reduction);
  const Tensor v = spatial_reduce(p.v, w.sr_v, cfg.spatial_reduction);
  const std::array<Tensor, 2> mixed = {esha_attend(p.q, k, v, cfg), gelu(p.u)};
  return w.w_op.forward(channel_concat(mixed));
}

}  // namespace mvit
