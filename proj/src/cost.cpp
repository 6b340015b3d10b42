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

#include "mvit/cost.hpp"

#include "mvit/errors.hpp"

namespace mvit {

namespace {

using i64 = std::int64_t;

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

class Accountant {
 public:
  Accountant(const ModelConfig& cfg, CostReport& report) : cfg_(cfg), report_(report) {}

  void row(std::string name, i64 params, i64 macs, Shape out) {
    report_.total_params += params;
    report_.total_macs += macs;
    report_.rows.push_back(CostRow{std::move(name), params, macs, out});
  }

  // BN statistics are 4 vectors; after fusion a BN becomes the conv bias.
  i64 norm_params(i64 channels, bool conv_has_bias) const {
    if (!cfg_.fused) return 4 * channels;
    return conv_has_bias ? 0 : channels;
  }

  void ffn(const std::string& name, i64 c, int h) {
    const i64 hidden = cfg_.ffn_expansion * c;
    const i64 weights = c * hidden + hidden + hidden * c + c;
    const i64 norm = cfg_.fused ? 0 : 4 * c;
    row(name, weights + norm, 2 * c * hidden * h * h, Shape{1, static_cast<int>(c), h, h});
  }

  void scale(const std::string& name, int c, int h) { row(name, c, 0, Shape{1, c, h, h}); }

 private:
  const ModelConfig& cfg_;
  CostReport& report_;
};

}  // namespace

CostReport count_macs(const ModelConfig& cfg, int resolution) {
  cfg.validate();
  if (resolution < 1 || resolution % cfg.stem_reduction() != 0) {
    throw ResolutionError("count_macs", "resolution", cfg.stem_reduction(), resolution);
  }
  CostReport report;
  report.variant = cfg.variant;
  report.resolution = resolution;
  report.fused = cfg.fused;
  Accountant acc(cfg, report);

  int h = resolution;
  i64 cin = 3;
  for (std::size_t i = 0; i < cfg.stem_ramp.size(); ++i) {
    const i64 cout = cfg.stem_ramp[i];
    h = conv_out(h, 3, 2, 1);
    acc.row("stem." + std::to_string(i), 9 * cin * cout + acc.norm_params(cout, false),
            cout * h * h * 9 * cin, Shape{1, static_cast<int>(cout), h, h});
    cin = cout;
  }

  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const StageConfig& st = cfg.stages[s];
    const std::string stage = "stage" + std::to_string(s + 1);
    const i64 c = st.width;
    const int ci = static_cast<int>(c);
    if (s > 0) {
      const i64 prev = cfg.stages[s - 1].width;
      const int pi = static_cast<int>(prev);
      acc.ffn(stage + ".embed.pre_ffn", prev, h);
      acc.scale(stage + ".embed.lambda_pre", pi, h);
      h = conv_out(h, 3, 2, 1);
      acc.row(stage + ".embed.dw", 9 * prev + acc.norm_params(prev, false), 9 * prev * h * h,
              Shape{1, pi, h, h});
      acc.row(stage + ".embed.pw", prev * c + acc.norm_params(c, false), prev * c * h * h,
              Shape{1, ci, h, h});
      acc.ffn(stage + ".embed.post_ffn", c, h);
      acc.scale(stage + ".embed.lambda_post", ci, h);
    }
    for (int b = 0; b < st.depth; ++b) {
      const std::string block = stage + ".block" + std::to_string(b);
      if (st.mixer == MixerKind::kDwConv) {
        acc.row(block + ".mixer.dw", 9 * c + acc.norm_params(c, false), 9 * c * h * h,
                Shape{1, ci, h, h});
      } else {
        const i64 g = st.groups;
        const i64 cq = st.query_dim;
        const i64 ck = st.key_dim;
        const i64 cv = st.esha().value_dim();
        const i64 proj = cq + ck + c;  // C_v + C_u == C
        acc.row(block + ".mixer.w_ip", 9 * (c / g) * proj + proj + acc.norm_params(proj, true),
                proj * h * h * 9 * (c / g), Shape{1, static_cast<int>(proj), h, h});
        int hr = h;
        if (st.spatial_reduction > 1) {
          hr = conv_out(h, 3, st.spatial_reduction, 1);
          acc.row(block + ".mixer.sr_k", 9 * ck + ck, 9 * ck * hr * hr,
                  Shape{1, static_cast<int>(ck), hr, hr});
          acc.row(block + ".mixer.sr_v", 9 * cv + cv, 9 * cv * hr * hr,
                  Shape{1, static_cast<int>(cv), hr, hr});
        }
        // Scores (N_q x N_kv x C_q) plus the weighted sum (N_q x N_kv x C_v).
        const i64 nq = static_cast<i64>(h) * h;
        const i64 nkv = static_cast<i64>(hr) * hr;
        acc.row(block + ".mixer.attn", 0, nq * nkv * (cq + cv), Shape{1, static_cast<int>(cv), h, h});
        acc.row(block + ".mixer.w_op", c * c + c + acc.norm_params(c, true), c * c * h * h,
                Shape{1, ci, h, h});
      }
      acc.ffn(block + ".ffn", c, h);
      acc.scale(block + ".lambda_mixer", ci, h);
      acc.scale(block + ".lambda_ffn", ci, h);
    }
  }

  const i64 c = cfg.stages.back().width;
  const i64 k = cfg.num_classes;
  acc.row("head.fc", c * k + k, c * k, Shape{1, static_cast<int>(k), 1, 1});
  return report;
}

CostReport count_params(const ModelConfig& cfg) { return count_macs(cfg, cfg.resolution); }

}  // namespace mvit
