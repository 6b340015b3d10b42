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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvit/model.hpp"

namespace mvit {

struct BenchOptions {
  int batch = 64;
  int iters = 10;
  int warmup = 2;
  int threads = 1;
  std::uint64_t seed = 0;
};

/// Throughput / latency summary of one measured run. Latencies are per
/// forward call over a full batch, in milliseconds.
struct BenchReport {
  std::string model_id;
  int batch = 0;
  int warmup = 0;
  int iters = 0;  // measured forward calls, summed over threads
  int threads = 1;
  bool fused = false;
  double total_seconds = 0.0;
  double throughput = 0.0;  // images / second
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  std::vector<double> latencies_ms;
  std::string started_at;
  std::string finished_at;
};

/// Throws ConfigError on non-positive sizes.
void validate(const BenchOptions& opt);

/// Runs `warmup` unmeasured then `iters` measured forward calls per thread,
/// over one shared network. Random input is generated before timing starts.
BenchReport run_bench(const Network& net, const std::string& model_id, const BenchOptions& opt);

/// Nearest-rank percentile of an ascending-sorted sample, p in (0, 100].
double percentile(const std::vector<double>& sorted, double p);

nlohmann::json to_json(const BenchReport& r);
BenchReport bench_report_from_json(const nlohmann::json& doc);

/// Schema every emitted report must satisfy; returns the first violation or "".
std::string check_bench_report(const nlohmann::json& doc);

}  // namespace mvit
