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

#include "doctest.h"
#include "mvit/errors.hpp"
#include "mvit/fusion.hpp"
#include "mvit/model.hpp"
#include "testing.hpp"

using namespace mvit;
using mvit::testing::allclose;
using mvit::testing::Gen;

namespace {

ModelConfig small_config() {
  ModelConfig cfg = variant_config("S1");
  for (const char* o : {"stage1.width=16", "stage2.width=32", "stage3.width=64", "stage3.groups=4",
                        "stage3.qk=8", "stage2.depth=1", "stage3.depth=2", "stem_ramp=8,16",
                        "resolution=64"}) {
    apply_override(cfg, o);
  }
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("identity norm with zero eps leaves the conv unchanged") {
  Gen g(1);
  const ConvLayer conv = g.conv(ConvSpec(4, 6, 3, 1, 1, 2, true));
  const ConvLayer fused = fold_batchnorm(conv, BatchNormParams::identity(6, 0.0f));
  CHECK(fused.weight == conv.weight);
  CHECK(fused.bias == conv.bias);
}

TEST_CASE("folding a hand-computed norm") {
  ConvLayer conv{ConvSpec(1, 1, 1, 1, 0, 1, true), Tensor(Shape{1, 1, 1, 1}, 2.0f), {1.0f}};
  BatchNormParams bn{{3.0f}, {5.0f}, {1.0f}, {4.0f}, 0.0f};
  const ConvLayer fused = fold_batchnorm(conv, bn);
  CHECK(fused.weight.at(0, 0, 0, 0) == 3.0f);
  CHECK(fused.bias[0] == 5.0f);

  // a bias-free conv gains one
  ConvLayer bare{ConvSpec(1, 1, 1), Tensor(Shape{1, 1, 1, 1}, 2.0f), {}};
  const ConvLayer b = fold_batchnorm(bare, bn);
  CHECK(b.spec.has_bias());
  CHECK(b.bias[0] == 3.5f);  // (0 - 1) * 1.5 + 5
}

TEST_CASE("folded layers match conv then norm and norm then conv") {
  Gen g(2);
  for (int i = 0; i < 20; ++i) {
    const int groups = g.pick(std::vector<int>{1, 2, 4});
    const ConvSpec spec(groups * g.range(1, 4), groups * g.range(1, 4), g.pick(std::vector<int>{1, 3}),
                        g.range(1, 2), g.range(0, 1), groups, g.coin());
    const ConvLayer conv = g.conv(spec);
    const BatchNormParams bn = g.batch_norm(spec.out_channels());
    const Tensor x = g.tensor(Shape{1, spec.in_channels(), 6, 6});
    const auto c = allclose(fold_batchnorm(conv, bn).forward(x), batch_norm2d(conv.forward(x), bn), 1e-5, 1e-5);
    CHECK_MESSAGE(c.ok, c.detail);

    const ConvLayer pw = g.conv(ConvSpec(spec.in_channels(), spec.out_channels(), 1, 1, 0, 1, true));
    const BatchNormParams in_bn = g.batch_norm(spec.in_channels());
    const auto p = allclose(fold_input_batchnorm(in_bn, pw).forward(x), pw.forward(batch_norm2d(x, in_bn)),
                            1e-5, 1e-5);
    CHECK_MESSAGE(p.ok, p.detail);
  }
  CHECK_THROWS_AS(fold_input_batchnorm(g.batch_norm(4), g.conv(ConvSpec(4, 4, 3, 1, 1))), ConfigError);
}

TEST_CASE("fused model drops every norm and keeps the logits") {
  const ModelConfig cfg = small_config();
  Model m = build_model(cfg);
  randomize_batchnorm(m.weights, 3);
  const Model fused = fuse_batchnorm(m);
  CHECK(fused.config.fused);
  CHECK(fused.weights.size() < m.weights.size());
  for (const auto& [name, t] : fused.weights) CHECK_FALSE(is_batchnorm_leaf(name));

  const Network a(m.config, m.weights);
  const Network b(fused.config, fused.weights);
  Gen g(4);
  for (int i = 0; i < 3; ++i) {
    const Tensor img = g.tensor(Shape{2, 3, 64, 64});
    const auto c = allclose(b.forward(img), a.forward(img), 0.0, 1e-4);
    CHECK_MESSAGE(c.ok, c.detail);
  }
}

TEST_CASE("fusion is idempotent") {
  Model m = build_model(small_config());
  randomize_batchnorm(m.weights, 5);
  const Model once = fuse_batchnorm(m);
  const Model twice = fuse_batchnorm(once);
  CHECK(twice.weights == once.weights);
  CHECK(twice.config == once.config);
}

TEST_CASE("orphan norms are structure errors") {
  Model m = build_model(small_config());
  m.weights.insert("stage1.block0.extra.gamma", StoredTensor::vector({1.0f}));
  CHECK_THROWS_AS(fuse_batchnorm(m), StructureError);

  Model fused = fuse_batchnorm(build_model(small_config()));
  fused.weights.insert("stage1.block0.extra.var", StoredTensor::vector({1.0f}));
  CHECK_THROWS_AS(fuse_batchnorm(fused), StructureError);
}

}  // TEST_SUITE
