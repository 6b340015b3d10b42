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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mvit/model.hpp"
#include "mvit/sidecar.hpp"
#include "mvit/weights_io.hpp"

using namespace mvit;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "mvit_unit_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
};

Run mvit_cli(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const std::string cmd = std::string("\"") + MVIT_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          (workdir() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto bytes = read_file(out);
  r.out.assign(bytes.begin(), bytes.end());
  return r;
}

std::string at(const std::string& name) { return "\"" + (workdir() / name).string() + "\""; }

const char* kTiny =
    "--variant S1 --override stage1.width=16 --override stage2.width=32 --override stage3.width=64 "
    "--override stage3.groups=4 --override stage3.qk=8 --override stage2.depth=1 --override stage3.depth=1 "
    "--override stem_ramp=8,16 --override resolution=32 --override num_classes=10";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("build is byte deterministic") {
  REQUIRE(mvit_cli(std::string("build ") + kTiny + " --seed 3 --out " + at("a.mvitw")).code == 0);
  REQUIRE(mvit_cli(std::string("build ") + kTiny + " --seed 3 --out " + at("b.mvitw")).code == 0);
  CHECK(read_file(workdir() / "a.mvitw") == read_file(workdir() / "b.mvitw"));
  CHECK(read_file(workdir() / "a.json") == read_file(workdir() / "b.json"));
  const Model m = load_model(workdir() / "a.mvitw");
  CHECK(m.config.stages[2].width == 64);
  CHECK(m.config.seed == 3);
}

TEST_CASE("ablation sidecar records ungrouped projections") {
  REQUIRE(mvit_cli("build --variant S2 --ablation no_group --out " + at("ng.mvitw")).code == 0);
  const auto bytes = read_file(workdir() / "ng.json");
  const ModelConfig cfg = parse_sidecar(std::string(bytes.begin(), bytes.end()));
  CHECK(cfg.stages[2].groups == 1);
}

TEST_CASE("usage and input errors exit 2") {
  CHECK(mvit_cli("build --variant S1 --override stage3.sr=3 --out " + at("bad.mvitw")).code == 2);
  CHECK(mvit_cli("build --variant S9 --out " + at("bad.mvitw")).code == 2);
  CHECK(mvit_cli("infer --model " + at("missing.mvitw") + " --input " + at("missing.mvt")).code == 2);
  CHECK(mvit_cli("frobnicate").code == 2);
  CHECK(mvit_cli("count").code == 2);
  CHECK(mvit_cli("bench --model " + at("a.mvitw") + " --batch 0").code == 2);
}

TEST_CASE("verify exit codes") {
  CHECK(mvit_cli(std::string("verify --golden \"") + MVIT_GOLDEN_DIR + "\"").code == 0);

  const fs::path broken = workdir() / "golden_broken";
  fs::remove_all(broken);
  fs::copy(MVIT_GOLDEN_DIR, broken, fs::copy_options::recursive);
  auto text = read_file(broken / "manifest.json");
  json doc = json::parse(std::string(text.begin(), text.end()));
  const std::string victim = doc["cases"][0]["expected"].get<std::string>();
  auto bytes = read_file(broken / victim);
  bytes.back() ^= 0x40;
  write_file(broken / victim, bytes);
  const Run r = mvit_cli("verify --golden " + at("golden_broken"));
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);

  CHECK(mvit_cli("verify --golden " + at("no_such_dir")).code == 2);
}

TEST_CASE("count reports totals as JSON") {
  const Run r = mvit_cli("count --variant S1 --json");
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["total_params"].get<std::int64_t>() == static_cast<std::int64_t>(
                                                        build_variant("S1", {}, 0).weights.total_elements()));
  CHECK(doc["unit"] == "macs");
  CHECK(doc["resolution"] == 224);
  const json strict = json::parse(mvit_cli("count --variant S1 --json --flops").out);
  CHECK(strict["total_flops"].get<std::int64_t>() == 2 * doc["total_macs"].get<std::int64_t>());
}

TEST_CASE("bench emits a schema-valid report") {
  REQUIRE(mvit_cli(std::string("build ") + kTiny + " --out " + at("bench.mvitw")).code == 0);
  const Run r = mvit_cli("bench --model " + at("bench.mvitw") + " --batch 2 --iters 5 --warmup 1 --json");
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["samples_ms"].size() == 5);
  CHECK(doc["batch"] == 2);
  const Run text = mvit_cli("bench --model " + at("bench.mvitw") + " --batch 1 --iters 2");
  CHECK(text.code == 0);
  CHECK(text.out.find("throughput") != std::string::npos);
}

TEST_CASE("fuse then infer agrees with the unfused logits") {
  REQUIRE(mvit_cli(std::string("build ") + kTiny + " --random-bn --seed 5 --out " + at("u.mvitw")).code == 0);
  REQUIRE(mvit_cli("fuse --model " + at("u.mvitw") + " --out " + at("f.mvitw")).code == 0);
  const Model fused = load_model(workdir() / "f.mvitw");
  CHECK(fused.config.fused);

  Tensor img(Shape{2, 3, 32, 32});
  for (std::size_t k = 0; k < img.size(); ++k) img.storage()[k] = static_cast<float>((k * 37 % 101) / 50.0 - 1.0);
  save_tensor(img, workdir() / "img.mvt");
  REQUIRE(mvit_cli("infer --model " + at("u.mvitw") + " --input " + at("img.mvt") + " --top 0 --out " +
                   at("u_logits.mvt")).code == 0);
  REQUIRE(mvit_cli("infer --model " + at("f.mvitw") + " --input " + at("img.mvt") + " --top 0 --out " +
                   at("f_logits.mvt")).code == 0);
  const StoredTensor u = load_stored_tensor(workdir() / "u_logits.mvt");
  const StoredTensor f = load_stored_tensor(workdir() / "f_logits.mvt");
  REQUIRE(u.dims == std::vector<std::uint32_t>{2, 10});
  REQUIRE(f.dims == u.dims);
  for (std::size_t k = 0; k < u.values.size(); ++k) CHECK(std::fabs(u.values[k] - f.values[k]) <= 1e-4);

  const Run top = mvit_cli("infer --model " + at("u.mvitw") + " --input " + at("img.mvt") + " --top 3");
  REQUIRE(top.code == 0);
  const json doc = json::parse(top.out);
  CHECK(doc["results"].size() == 2);
  CHECK(doc["results"][0]["top"].size() == 3);
}

TEST_CASE("infer reproduces the shipped tiny-model logits") {
  const fs::path golden = MVIT_GOLDEN_DIR;
  REQUIRE(mvit_cli("infer --model \"" + (golden / "tiny_model.mvitw").string() + "\" --input \"" +
                   (golden / "tiny_model.input.mvt").string() + "\" --top 0 --out " + at("tiny_logits.mvt"))
              .code == 0);
  const StoredTensor got = load_stored_tensor(workdir() / "tiny_logits.mvt");
  const StoredTensor want = load_stored_tensor(golden / "tiny_model.expected.mvt");
  REQUIRE(got.values.size() == want.values.size());
  for (std::size_t k = 0; k < got.values.size(); ++k) {
    CHECK(std::fabs(got.values[k] - want.values[k]) <= 1e-4 + 1e-3 * std::fabs(want.values[k]));
  }
}

}  // TEST_SUITE
