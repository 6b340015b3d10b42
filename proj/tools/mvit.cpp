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

// mvit: build, inspect, run and benchmark mvit models.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvit/bench.hpp"
#include "mvit/cost.hpp"
#include "mvit/errors.hpp"
#include "mvit/fusion.hpp"
#include "mvit/model.hpp"
#include "mvit/sidecar.hpp"
#include "mvit/verify.hpp"
#include "mvit/weights_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

void init_logging() {
  auto logger = spdlog::stderr_color_mt("mvit");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MVIT_LOG")) {
    const std::string level = env;
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      spdlog::warn("ignoring MVIT_LOG={} (expected error, info or debug)", level);
    }
  }
}

struct BuildArgs {
  std::string variant;
  std::uint64_t seed = 0;
  std::string out;
  std::string ablation;
  std::vector<std::string> overrides;
  bool random_bn = false;
};

int cmd_build(const BuildArgs& a) {
  mvit::Model m;
  if (!a.ablation.empty()) {
    if (!a.overrides.empty()) throw mvit::ConfigError("--override cannot be combined with --ablation");
    m = mvit::build_ablation(a.variant, mvit::ablation_from_string(a.ablation), a.seed);
  } else {
    m = mvit::build_variant(a.variant, a.overrides, a.seed);
  }
  if (a.random_bn) mvit::randomize_batchnorm(m.weights, a.seed + 1);
  mvit::save_model(m, a.out);
  spdlog::info("wrote {} ({} tensors, {} parameters) and {}", a.out, m.weights.size(),
               m.weights.total_elements(), mvit::sidecar_path(a.out).string());
  return kExitOk;
}

struct InferArgs {
  std::string model;
  std::string input;
  int top = 5;
  std::string out = "logits.mvt";
};

int cmd_infer(const InferArgs& a) {
  if (a.top < 0) throw mvit::ConfigError("--top must be >= 0");
  const mvit::Model m = mvit::load_model(a.model);
  const mvit::Tensor x = mvit::load_tensor(a.input);
  const mvit::Network net(m.config, m.weights);
  const mvit::Matrix logits = net.forward(x);
  spdlog::debug("forward: input {} -> {}x{} logits", mvit::to_string(x.shape()), logits.rows, logits.cols);

  if (a.top == 0) {
    mvit::TensorSet out;
    out.insert("logits", mvit::StoredTensor{{static_cast<std::uint32_t>(logits.rows),
                                             static_cast<std::uint32_t>(logits.cols)},
                                            logits.data});
    mvit::save_container(out, a.out);
    std::cout << json{{"model", a.model}, {"logits", a.out}, {"rows", logits.rows}, {"cols", logits.cols}}.dump(2)
              << "\n";
    return kExitOk;
  }
  const int k = std::min(a.top, logits.cols);
  json results = json::array();
  for (int n = 0; n < logits.rows; ++n) {
    std::vector<int> order(logits.cols);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int i, int j) {
      return logits(n, i) > logits(n, j) || (logits(n, i) == logits(n, j) && i < j);
    });
    json top = json::array();
    for (int i = 0; i < k; ++i) top.push_back({{"class", order[i]}, {"logit", logits(n, order[i])}});
    results.push_back({{"sample", n}, {"top", std::move(top)}});
  }
  std::cout << json{{"model", a.model}, {"results", std::move(results)}}.dump(2) << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string model;
  mvit::BenchOptions opt;
  bool json = false;
};

int cmd_bench(const BenchArgs& a) {
  mvit::validate(a.opt);
  const mvit::Model m = mvit::load_model(a.model);
  const mvit::Network net(m.config, m.weights);
  const std::string id = m.config.variant + "@" + fs::path(a.model).filename().string();
  const mvit::BenchReport r = mvit::run_bench(net, id, a.opt);
  if (a.json) {
    std::cout << mvit::to_json(r).dump(2) << "\n";
    return kExitOk;
  }
  fmt::print("model       {}\n", r.model_id);
  fmt::print("fused       {}\n", r.fused ? "yes" : "no");
  fmt::print("batch       {}  threads {}  warmup {}  iters {}\n", r.batch, r.threads, r.warmup, r.iters);
  fmt::print("throughput  {:.2f} images/s\n", r.throughput);
  fmt::print("latency ms  p50 {:.3f}  p90 {:.3f}  p99 {:.3f}\n", r.p50_ms, r.p90_ms, r.p99_ms);
  return kExitOk;
}

struct CountArgs {
  std::string variant;
  int resolution = 224;
  bool json = false;
  bool strict = false;
  std::string ablation;
  std::vector<std::string> overrides;
};

int cmd_count(const CountArgs& a) {
  mvit::ModelConfig cfg = a.ablation.empty()
                              ? mvit::variant_config(a.variant)
                              : mvit::ablation_config(mvit::variant_config(a.variant),
                                                      mvit::ablation_from_string(a.ablation));
  for (const std::string& o : a.overrides) mvit::apply_override(cfg, o);
  const mvit::CostReport r = mvit::count_macs(cfg, a.resolution);
  const char* unit = a.strict ? "flops" : "macs";
  if (a.json) {
    json rows = json::array();
    for (const mvit::CostRow& row : r.rows) {
      rows.push_back({{"name", row.name},
                      {"params", row.params},
                      {unit, a.strict ? 2 * row.macs : row.macs},
                      {"output", {row.output.c, row.output.h, row.output.w}}});
    }
    std::cout << json{{"variant", r.variant},
                      {"resolution", r.resolution},
                      {"unit", unit},
                      {"rows", std::move(rows)},
                      {"total_params", r.total_params},
                      {std::string("total_") + unit, r.flops(a.strict)}}
                     .dump(2)
              << "\n";
    return kExitOk;
  }
  fmt::print("{:<44} {:>12} {:>14}  {}\n", "layer", "params", unit, "output (CxHxW)");
  for (const mvit::CostRow& row : r.rows) {
    fmt::print("{:<44} {:>12} {:>14}  {}x{}x{}\n", row.name, row.params, a.strict ? 2 * row.macs : row.macs,
               row.output.c, row.output.h, row.output.w);
  }
  fmt::print("{:<44} {:>12} {:>14}\n", "total", r.total_params, r.flops(a.strict));
  fmt::print("{} @{}: {:.3f} M params, {:.3f} G {}\n", r.variant, r.resolution, r.total_params / 1e6,
             r.flops(a.strict) / 1e9, a.strict ? "FLOPs" : "MACs");
  return kExitOk;
}

int cmd_fuse(const std::string& in, const std::string& out) {
  const mvit::Model m = mvit::load_model(in);
  const mvit::Model fused = mvit::fuse_batchnorm(m);
  mvit::save_model(fused, out);
  spdlog::info("fused {} tensors into {}", m.weights.size(), fused.weights.size());
  return kExitOk;
}

int cmd_verify(const std::string& dir) {
  const mvit::VerifyReport report = mvit::verify_golden(dir);
  for (const mvit::CaseResult& c : report.cases) {
    fmt::print("{} {:<36} {:<18} max_abs={:.3e} max_rel={:.3e}{}\n", c.cmp.passed ? "PASS" : "FAIL", c.name, c.op,
               c.cmp.max_abs, c.cmp.max_rel, c.cmp.error.empty() ? "" : "  (" + c.cmp.error + ")");
  }
  fmt::print("{} of {} cases passed\n", report.cases.size() - report.failures(), report.cases.size());
  return report.all_passed() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();

  CLI::App app{"mvit: vision transformer inference engine and model toolkit"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Initialise a model and write weights + sidecar");
  b->add_option("--variant", build.variant, "S1, S2 or S3")->required();
  b->add_option("--seed", build.seed, "Initialisation seed");
  b->add_option("--out", build.out, "Output weights (.mvitw)")->required();
  b->add_option("--ablation", build.ablation, "no_group or low_res_attn");
  b->add_option("--override", build.overrides, "key=value config override (repeatable)");
  b->add_flag("--random-bn", build.random_bn, "Draw non-identity batch-norm statistics");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Classify an input tensor");
  i->add_option("--model", infer.model, "Weights (.mvitw) with sidecar")->required();
  i->add_option("--input", infer.input, "Input tensor (.mvt), N x 3 x R x R")->required();
  i->add_option("--top", infer.top, "Top-K classes to print; 0 dumps all logits");
  i->add_option("--out", infer.out, "Logit file written by --top 0");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Measure throughput and latency");
  be->add_option("--model", bench.model, "Weights (.mvitw) with sidecar")->required();
  be->add_option("--batch", bench.opt.batch, "Images per forward call");
  be->add_option("--iters", bench.opt.iters, "Measured forward calls per thread");
  be->add_option("--warmup", bench.opt.warmup, "Unmeasured forward calls per thread");
  be->add_option("--threads", bench.opt.threads, "Concurrent forward passes");
  be->add_option("--seed", bench.opt.seed, "Input seed");
  be->add_flag("--json", bench.json, "Emit the report as JSON");

  CountArgs count;
  auto* c = app.add_subcommand("count", "Per-layer parameter and MAC table");
  c->add_option("--variant", count.variant, "S1, S2 or S3")->required();
  c->add_option("--res", count.resolution, "Input resolution");
  c->add_option("--ablation", count.ablation, "no_group or low_res_attn");
  c->add_option("--override", count.overrides, "key=value config override (repeatable)");
  c->add_flag("--json", count.json, "Emit JSON");
  c->add_flag("--flops", count.strict, "Report 2 x MACs");

  std::string fuse_in, fuse_out;
  auto* f = app.add_subcommand("fuse", "Fold batch norms into adjacent convolutions");
  f->add_option("--model", fuse_in, "Input weights (.mvitw)")->required();
  f->add_option("--out", fuse_out, "Output weights (.mvitw)")->required();

  std::string golden;
  auto* v = app.add_subcommand("verify", "Check the engine against golden fixtures");
  v->add_option("--golden", golden, "Directory holding manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (b->parsed()) return cmd_build(build);
    if (i->parsed()) return cmd_infer(infer);
    if (be->parsed()) return cmd_bench(bench);
    if (c->parsed()) return cmd_count(count);
    if (f->parsed()) return cmd_fuse(fuse_in, fuse_out);
    if (v->parsed()) return cmd_verify(golden);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
