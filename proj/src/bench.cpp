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

#include "mvit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <latch>
#include <mutex>
#include <random>
#include <thread>

#include "mvit/errors.hpp"

namespace mvit {

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Tensor random_batch(int batch, int resolution, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t(Shape{batch, 3, resolution, resolution});
  for (float& v : t.storage()) v = dist(gen);
  return t;
}

}  // namespace

void validate(const BenchOptions& opt) {
  if (opt.batch < 1) throw ConfigError("bench: batch must be >= 1");
  if (opt.iters < 1) throw ConfigError("bench: iters must be >= 1");
  if (opt.warmup < 0) throw ConfigError("bench: warmup must be >= 0");
  if (opt.threads < 1) throw ConfigError("bench: threads must be >= 1");
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

BenchReport run_bench(const Network& net, const std::string& model_id, const BenchOptions& opt) {
  validate(opt);
  BenchReport report;
  report.model_id = model_id;
  report.batch = opt.batch;
  report.warmup = opt.warmup;
  report.threads = opt.threads;
  report.fused = net.config().fused;

  std::vector<Tensor> inputs;
  for (int t = 0; t < opt.threads; ++t) {
    inputs.push_back(random_batch(opt.batch, net.config().resolution, opt.seed + t));
  }

  std::mutex mu;
  std::latch warmed(opt.threads + 1);
  std::latch go(1);
  auto worker = [&](int t) {
    for (int i = 0; i < opt.warmup; ++i) (void)net.forward(inputs[t]);
    warmed.count_down();
    go.wait();
    std::vector<double> local;
    local.reserve(opt.iters);
    for (int i = 0; i < opt.iters; ++i) {
      const auto start = Clock::now();
      (void)net.forward(inputs[t]);
      local.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    std::lock_guard lock(mu);
    report.latencies_ms.insert(report.latencies_ms.end(), local.begin(), local.end());
  };

  std::vector<std::jthread> pool;
  for (int t = 0; t < opt.threads; ++t) pool.emplace_back(worker, t);
  warmed.arrive_and_wait();
  report.started_at = utc_now();
  const auto start = Clock::now();
  go.count_down();
  pool.clear();  // joins
  report.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  report.finished_at = utc_now();

  report.iters = static_cast<int>(report.latencies_ms.size());
  report.throughput = static_cast<double>(opt.batch) * report.iters / report.total_seconds;
  std::vector<double> sorted = report.latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  report.p50_ms = percentile(sorted, 50);
  report.p90_ms = percentile(sorted, 90);
  report.p99_ms = percentile(sorted, 99);
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  return nlohmann::json{{"model_id", r.model_id},
                        {"batch", r.batch},
                        {"warmup", r.warmup},
                        {"iters", r.iters},
                        {"threads", r.threads},
                        {"fused", r.fused},
                        {"total_seconds", r.total_seconds},
                        {"throughput", r.throughput},
                        {"latency_ms", {{"p50", r.p50_ms}, {"p90", r.p90_ms}, {"p99", r.p99_ms}}},
                        {"samples_ms", r.latencies_ms},
                        {"started_at", r.started_at},
                        {"finished_at", r.finished_at}};
}

BenchReport bench_report_from_json(const nlohmann::json& doc) {
  if (const std::string err = check_bench_report(doc); !err.empty()) {
    throw ConfigError("bench report: " + err);
  }
  BenchReport r;
  r.model_id = doc.at("model_id").get<std::string>();
  r.batch = doc.at("batch").get<int>();
  r.warmup = doc.at("warmup").get<int>();
  r.iters = doc.at("iters").get<int>();
  r.threads = doc.at("threads").get<int>();
  r.fused = doc.at("fused").get<bool>();
  r.total_seconds = doc.at("total_seconds").get<double>();
  r.throughput = doc.at("throughput").get<double>();
  r.p50_ms = doc.at("latency_ms").at("p50").get<double>();
  r.p90_ms = doc.at("latency_ms").at("p90").get<double>();
  r.p99_ms = doc.at("latency_ms").at("p99").get<double>();
  r.latencies_ms = doc.at("samples_ms").get<std::vector<double>>();
  r.started_at = doc.at("started_at").get<std::string>();
  r.finished_at = doc.at("finished_at").get<std::string>();
  return r;
}

std::string check_bench_report(const nlohmann::json& doc) {
  if (!doc.is_object()) return "not an object";
  const std::pair<const char*, nlohmann::json::value_t> fields[] = {
      {"model_id", nlohmann::json::value_t::string},
      {"batch", nlohmann::json::value_t::number_unsigned},
      {"warmup", nlohmann::json::value_t::number_unsigned},
      {"iters", nlohmann::json::value_t::number_unsigned},
      {"threads", nlohmann::json::value_t::number_unsigned},
      {"fused", nlohmann::json::value_t::boolean},
      {"total_seconds", nlohmann::json::value_t::number_float},
      {"throughput", nlohmann::json::value_t::number_float},
      {"latency_ms", nlohmann::json::value_t::object},
      {"samples_ms", nlohmann::json::value_t::array},
      {"started_at", nlohmann::json::value_t::string},
      {"finished_at", nlohmann::json::value_t::string},
  };
  for (const auto& [key, type] : fields) {
    if (!doc.contains(key)) return std::string("missing '") + key + "'";
    const auto got = doc.at(key).type();
    const bool integral_ok = type == nlohmann::json::value_t::number_unsigned &&
                             got == nlohmann::json::value_t::number_integer;
    if (got != type && !integral_ok) return std::string("'") + key + "' has the wrong type";
  }
  const auto& lat = doc.at("latency_ms");
  for (const char* key : {"p50", "p90", "p99"}) {
    if (!lat.contains(key) || !lat.at(key).is_number()) return std::string("latency_ms.") + key + " missing";
  }
  if (doc.at("batch").get<long>() < 1 || doc.at("iters").get<long>() < 1) return "batch and iters must be >= 1";
  if (doc.at("samples_ms").size() != doc.at("iters").get<std::size_t>()) return "samples_ms size != iters";
  const double p50 = lat.at("p50").get<double>();
  const double p90 = lat.at("p90").get<double>();
  const double p99 = lat.at("p99").get<double>();
  if (!(p50 <= p90 && p90 <= p99)) return "percentiles not ordered";
  const double expect = doc.at("batch").get<double>() * doc.at("iters").get<double>() /
                        doc.at("total_seconds").get<double>();
  if (std::fabs(expect - doc.at("throughput").get<double>()) > 1e-6 * expect) {
    return "throughput != batch * iters / total_seconds";
  }
  return "";
}

}  // namespace mvit
