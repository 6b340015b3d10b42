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

#include <map>
#include <string>

#include "doctest.h"
#include "mvit/cost.hpp"
#include "mvit/errors.hpp"
#include "mvit/fusion.hpp"
#include "mvit/model.hpp"
#include "testing.hpp"

using namespace mvit;
using mvit::testing::Gen;

namespace {

std::int64_t sum_params(const CostReport& r) {
  std::int64_t s = 0;
  for (const CostRow& row : r.rows) s += row.params;
  return s;
}

std::int64_t sum_macs(const CostReport& r) {
  std::int64_t s = 0;
  for (const CostRow& row : r.rows) s += row.macs;
  return s;
}

ModelConfig random_config(Gen& g) {
  for (;;) {
    ModelConfig cfg = variant_config(g.pick(std::vector<std::string>{"S1", "S2", "S3"}));
    const std::vector<std::string> overrides = {
        "stage1.width=" + std::to_string(8 * g.range(1, 8)),
        "stage2.depth=" + std::to_string(g.range(0, 3)),
        "stage3.depth=" + std::to_string(g.range(1, 3)),
        "stage3.qk=" + std::to_string(g.range(1, 16)),
        "stage3.groups=" + std::to_string(g.pick(std::vector<int>{1, 2, 4, 8, 16, 32})),
        "stage3.sr=" + std::to_string(g.range(1, 2)),
        "stage2.mixer=" + std::string(g.coin() ? "esha" : "dwconv"),
        "alpha=" + std::to_string(g.range(1, 4)),
        "num_classes=" + std::to_string(g.range(1, 100)),
    };
    try {
      for (const std::string& o : overrides) apply_override(cfg, o);
      return cfg;
    } catch (const ConfigError&) {
    }
  }
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("rows sum to the totals") {
  for (const char* v : {"S1", "S2", "S3"}) {
    const CostReport r = count_macs(variant_config(v), 224);
    CHECK(sum_params(r) == r.total_params);
    CHECK(sum_macs(r) == r.total_macs);
    CHECK(r.flops(true) == 2 * r.total_macs);
    CHECK(r.flops(false) == r.total_macs);
  }
}

TEST_CASE("closed-form parameter count equals the built element total") {
  for (const char* v : {"S1", "S2", "S3"}) {
    const Model m = build_variant(v, {}, 0);
    CHECK(count_params(m.config).total_params == static_cast<std::int64_t>(m.weights.total_elements()));
    const Model fused = fuse_batchnorm(m);
    CHECK(count_params(fused.config).total_params ==
          static_cast<std::int64_t>(fused.weights.total_elements()));
  }
  Gen g(1);
  for (int i = 0; i < 20; ++i) {
    ModelConfig cfg = random_config(g);
    cfg.seed = static_cast<std::uint64_t>(i);
    const Model m = build_model(cfg);
    CHECK_MESSAGE(count_params(cfg).total_params == static_cast<std::int64_t>(m.weights.total_elements()),
                  "case " << i);
  }
}

TEST_CASE("a pointwise 8->8 conv on a 4x4 map costs 1024 MACs") {
  ModelConfig cfg;
  StageConfig st;
  st.width = 8;
  st.depth = 0;
  cfg.stages = {st, st};
  cfg.stem_ramp = {8};
  cfg.resolution = 16;
  const CostReport r = count_macs(cfg, 16);
  bool found = false;
  for (const CostRow& row : r.rows) {
    if (row.name == "stage2.embed.pw") {
      found = true;
      CHECK(row.macs == 1024);
      CHECK(row.params == 64 + 4 * 8);
      CHECK(row.output == Shape{1, 8, 4, 4});
    }
  }
  CHECK(found);
}

TEST_CASE("doubling the resolution quadruples conv MACs") {
  const ModelConfig cfg = variant_config("S2");
  // 256 keeps every stage grid even, so each downsampling halves exactly
  const CostReport lo = count_macs(cfg, 256);
  const CostReport hi = count_macs(cfg, 512);
  REQUIRE(lo.rows.size() == hi.rows.size());
  for (std::size_t i = 0; i < lo.rows.size(); ++i) {
    const std::string& name = lo.rows[i].name;
    if (name == "head.fc") {
      CHECK(hi.rows[i].macs == lo.rows[i].macs);
    } else if (name.ends_with(".attn")) {
      CHECK(hi.rows[i].macs == 16 * lo.rows[i].macs);
    } else {
      CHECK_MESSAGE(hi.rows[i].macs == 4 * lo.rows[i].macs, name);
    }
    CHECK(hi.rows[i].params == lo.rows[i].params);
  }
  CHECK_THROWS_AS(count_macs(cfg, 100), ResolutionError);
}

TEST_CASE("ablations move the counts in the expected direction") {
  const ModelConfig base = variant_config("S2");
  const CostReport b = count_params(base);
  const CostReport ng = count_params(ablation_config(base, AblationMode::kNoGroup));
  CHECK(ng.total_params > b.total_params);
  CHECK(ng.total_macs > b.total_macs);
  const ModelConfig s3 = variant_config("S3");
  CHECK(count_params(ablation_config(s3, AblationMode::kLowResAttn)).total_macs < count_params(s3).total_macs);
}

}  // TEST_SUITE
