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

#include <algorithm>
#include <vector>

#include "mvit/errors.hpp"
#include "mvit/tensor.hpp"

namespace mvit {

ConvSpec::ConvSpec(int in_channels, int out_channels, int kernel, int stride,
                   int padding, int groups, bool has_bias)
    : ConvSpec(in_channels, out_channels, kernel, kernel, stride, padding, groups,
               has_bias) {}

ConvSpec::ConvSpec(int in_channels, int out_channels, int kernel_h, int kernel_w,
                   int stride, int padding, int groups, bool has_bias)
    : in_(in_channels),
      out_(out_channels),
      kh_(kernel_h),
      kw_(kernel_w),
      stride_(stride),
      padding_(padding),
      groups_(groups),
      has_bias_(has_bias) {
  if (in_ < 1 || out_ < 1) throw ConfigError("conv: channel counts must be >= 1");
  if (kh_ < 1 || kw_ < 1) throw ConfigError("conv: kernel extent must be >= 1");
  if (stride_ < 1) throw ConfigError("conv: stride must be >= 1");
  if (padding_ < 0) throw ConfigError("conv: padding must be >= 0");
  if (groups_ < 1) throw ConfigError("conv: groups must be >= 1");
  if (in_ % groups_ != 0) {
    throw ConfigError("conv: in_channels " + std::to_string(in_) +
                      " not divisible by groups " + std::to_string(groups_));
  }
  if (out_ % groups_ != 0) {
    throw ConfigError("conv: out_channels " + std::to_string(out_) +
                      " not divisible by groups " + std::to_string(groups_));
  }
}

ConvSpec ConvSpec::with_bias(bool b) const {
  ConvSpec copy = *this;
  copy.has_bias_ = b;
  return copy;
}

Shape ConvSpec::weight_shape() const { return Shape{out_, in_ / groups_, kh_, kw_}; }

std::int64_t ConvSpec::param_count() const {
  return static_cast<std::int64_t>(out_) * (in_ / groups_) * kh_ * kw_ +
         (has_bias_ ? out_ : 0);
}

namespace {

struct Geometry {
  int out_h;
  int out_w;
};

Geometry validate(const char* op, const Tensor& input, const Tensor& weight,
                  const std::optional<std::span<const float>>& bias,
                  const ConvSpec& spec) {
  const Shape& s = input.shape();
  if (s.c != spec.in_channels()) throw ShapeError(op, "input C", spec.in_channels(), s.c);
  const Shape ws = spec.weight_shape();
  const Shape& got = weight.shape();
  if (got.n != ws.n) throw ShapeError(op, "weight out_channels", ws.n, got.n);
  if (got.c != ws.c) throw ShapeError(op, "weight in_channels/groups", ws.c, got.c);
  if (got.h != ws.h) throw ShapeError(op, "weight k_h", ws.h, got.h);
  if (got.w != ws.w) throw ShapeError(op, "weight k_w", ws.w, got.w);
  const auto bias_len = bias ? static_cast<std::int64_t>(bias->size()) : 0;
  const auto want_bias = spec.has_bias() ? spec.out_channels() : 0;
  if (bias_len != want_bias) throw ShapeError(op, "bias", want_bias, bias_len);

  Geometry g{spec.out_size(s.h), spec.out_size_w(s.w)};
  if (g.out_h < 1) throw ShapeError(op, "output H", 1, g.out_h);
  if (g.out_w < 1) throw ShapeError(op, "output W", 1, g.out_w);
  return g;
}

// Register-blocked kernel shared by every non-depthwise conv: kRows output
// channels x kCols output pixels of double accumulators. Weights are packed
// per group as [block][k][kRows]; each pixel tile is packed as [k][kCols]
// by `pack`. The reduction index k runs in (ic, kh, kw) order, so every
// output sums its taps in the same order as a naive loop nest.
constexpr int kRows = 4;
constexpr int kCols = 8;

template <typename Pack>
void blocked_conv(const Tensor& weight, const float* bias, const ConvSpec& spec, Tensor& out,
                  Pack&& pack) {
  const int groups = spec.groups();
  const int cout_g = spec.out_channels() / groups;
  const int depth = (spec.in_channels() / groups) * spec.kernel_h() * spec.kernel_w();
  const int blocks = (cout_g + kRows - 1) / kRows;
  const std::size_t plane = out.shape().plane();
  std::vector<double> wp(static_cast<std::size_t>(blocks) * depth * kRows);
  std::vector<double> xp(static_cast<std::size_t>(depth) * kCols);

  for (int g = 0; g < groups; ++g) {
    for (int blk = 0; blk < blocks; ++blk) {
      for (int r = 0; r < kRows; ++r) {
        const int o = blk * kRows + r;
        const float* src = o < cout_g ? weight.plane(g * cout_g + o, 0) : nullptr;
        for (int k = 0; k < depth; ++k) {
          wp[(static_cast<std::size_t>(blk) * depth + k) * kRows + r] = src ? src[k] : 0.0;
        }
      }
    }
    for (int n = 0; n < out.shape().n; ++n) {
      for (std::size_t t0 = 0; t0 < plane; t0 += kCols) {
        const std::size_t len = std::min<std::size_t>(kCols, plane - t0);
        pack(n, g, t0, len, xp.data());
        for (int blk = 0; blk < blocks; ++blk) {
          double acc[kRows][kCols] = {};
          const double* wb = wp.data() + static_cast<std::size_t>(blk) * depth * kRows;
          for (int k = 0; k < depth; ++k) {
            const double* xv = xp.data() + static_cast<std::size_t>(k) * kCols;
            const double* wv = wb + static_cast<std::size_t>(k) * kRows;
            for (int r = 0; r < kRows; ++r) {
              for (int p = 0; p < kCols; ++p) acc[r][p] += wv[r] * xv[p];
            }
          }
          const int rows = std::min(kRows, cout_g - blk * kRows);
          for (int r = 0; r < rows; ++r) {
            const int oc = g * cout_g + blk * kRows + r;
            const double b = bias ? bias[oc] : 0.0;
            float* dst = out.plane(n, oc) + t0;
            for (std::size_t p = 0; p < len; ++p) dst[p] = static_cast<float>(acc[r][p] + b);
          }
        }
      }
    }
  }
}

void pointwise(const Tensor& input, const Tensor& weight, const float* bias,
               const ConvSpec& spec, Tensor& out) {
  const int cin_g = spec.in_channels() / spec.groups();
  blocked_conv(weight, bias, spec, out,
               [&](int n, int g, std::size_t t0, std::size_t len, double* xp) {
                 for (int ic = 0; ic < cin_g; ++ic) {
                   const float* x = input.plane(n, g * cin_g + ic) + t0;
                   double* dst = xp + static_cast<std::size_t>(ic) * kCols;
                   for (std::size_t p = 0; p < kCols; ++p) dst[p] = p < len ? x[p] : 0.0;
                 }
               });
}

// General stride/padding/kernel: the tile is an im2col slice, with
// out-of-bounds taps packed as zeros.
void direct(const Tensor& input, const Tensor& weight, const float* bias,
            const ConvSpec& spec, Tensor& out) {
  const Shape& s = input.shape();
  const int out_w = out.shape().w;
  const int cin_g = spec.in_channels() / spec.groups();
  const int kh_n = spec.kernel_h();
  const int kw_n = spec.kernel_w();
  const int stride = spec.stride();
  const int pad = spec.padding();
  int ih0[kCols];
  int iw0[kCols];
  blocked_conv(weight, bias, spec, out,
               [&](int n, int g, std::size_t t0, std::size_t len, double* xp) {
                 for (std::size_t p = 0; p < kCols; ++p) {
                   const int idx = static_cast<int>(t0 + std::min(p, len - 1));
                   ih0[p] = (idx / out_w) * stride - pad;
                   iw0[p] = (idx % out_w) * stride - pad;
                 }
                 double* dst = xp;
                 for (int ic = 0; ic < cin_g; ++ic) {
                   const float* x = input.plane(n, g * cin_g + ic);
                   for (int kh = 0; kh < kh_n; ++kh) {
                     for (int kw = 0; kw < kw_n; ++kw, dst += kCols) {
                       for (std::size_t p = 0; p < kCols; ++p) {
                         const int ih = ih0[p] + kh;
                         const int iw = iw0[p] + kw;
                         const bool inside = p < len && ih >= 0 && ih < s.h && iw >= 0 && iw < s.w;
                         dst[p] = inside ? x[static_cast<std::size_t>(ih) * s.w + iw] : 0.0;
                       }
                     }
                   }
                 }
               });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight,
              std::optional<std::span<const float>> bias, const ConvSpec& spec) {
  const Geometry geo = validate("conv2d", input, weight, bias, spec);
  Tensor out(Shape{input.shape().n, spec.out_channels(), geo.out_h, geo.out_w});
  const float* b = bias ? bias->data() : nullptr;
  if (spec.kernel_h() == 1 && spec.kernel_w() == 1 && spec.stride() == 1 &&
      spec.padding() == 0) {
    pointwise(input, weight, b, spec, out);
  } else {
    direct(input, weight, b, spec, out);
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight,
                        std::optional<std::span<const float>> bias,
                        const ConvSpec& spec) {
  if (spec.groups() != spec.in_channels() || spec.out_channels() != spec.in_channels()) {
    throw ShapeError("depthwise_conv2d", "groups", spec.in_channels(), spec.groups());
  }
  const Geometry geo = validate("depthwise_conv2d", input, weight, bias, spec);
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, s.c, geo.out_h, geo.out_w});
  const int kh_n = spec.kernel_h();
  const int kw_n = spec.kernel_w();
  const int stride = spec.stride();
  const int pad = spec.padding();

  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* x = input.plane(n, c);
      const float* k = weight.plane(c, 0);
      float* dst = out.plane(n, c);
      const double b = bias ? (*bias)[c] : 0.0;
      for (int oh = 0; oh < geo.out_h; ++oh) {
        for (int ow = 0; ow < geo.out_w; ++ow) {
          double acc = 0.0;
          for (int kh = 0; kh < kh_n; ++kh) {
            const int ih = oh * stride - pad + kh;
            if (ih < 0 || ih >= s.h) continue;
            for (int kw = 0; kw < kw_n; ++kw) {
              const int iw = ow * stride - pad + kw;
              if (iw < 0 || iw >= s.w) continue;
              acc += static_cast<double>(k[kh * kw_n + kw]) * x[ih * s.w + iw];
            }
          }
          dst[oh * geo.out_w + ow] = static_cast<float>(acc + b);
        }
      }
    }
  }
  return out;
}

}  // namespace mvit
