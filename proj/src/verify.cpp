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

#include "mvit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>

#include "mvit/assembly.hpp"
#include "mvit/blocks.hpp"
#include "mvit/errors.hpp"
#include "mvit/esha.hpp"
#include "mvit/model.hpp"
#include "mvit/sidecar.hpp"
#include "mvit/weights_io.hpp"

namespace mvit {

namespace fs = std::filesystem;
using nlohmann::json;

int VerifyReport::failures() const {
  return static_cast<int>(std::count_if(cases.begin(), cases.end(),
                                        [](const CaseResult& c) { return !c.cmp.passed; }));
}

namespace {

template <typename T>
T need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T opt(const json& obj, const char* key, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fixture config: field '") + key + "': " + e.what());
  }
}

// Positional tensors and the merged parameter set of one case.
struct CaseInputs {
  std::vector<StoredTensor> tensors;
  TensorSet params;
  std::optional<fs::path> params_path;

  const StoredTensor& tensor(std::size_t i) const {
    if (i >= tensors.size()) {
      throw ConfigError("fixture: expected at least " + std::to_string(i + 1) + " tensor inputs");
    }
    return tensors[i];
  }
};

CaseInputs load_inputs(const std::vector<fs::path>& paths) {
  CaseInputs in;
  for (const fs::path& p : paths) {
    if (p.extension() == ".mvitw") {
      for (auto& [name, t] : load_container(p)) in.params.insert(name, t);
      if (!in.params_path) in.params_path = p;
    } else {
      in.tensors.push_back(load_stored_tensor(p));
    }
  }
  return in;
}

Matrix to_matrix(const StoredTensor& t) {
  if (t.rank() != 2) throw ShapeError("fixture.matrix", "rank", 2, t.rank());
  Matrix m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  m.data = t.values;
  return m;
}

StoredTensor from_matrix(const Matrix& m) {
  return StoredTensor{{static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)}, m.data};
}

TensorSet single(const Tensor& t) {
  TensorSet out;
  out.insert("output", StoredTensor::from_tensor(t));
  return out;
}

TensorSet single(const Matrix& m) {
  TensorSet out;
  out.insert("output", from_matrix(m));
  return out;
}

UnitOptions unit_options(const json& config) {
  return UnitOptions{opt<bool>(config, "fused", false), opt<double>(config, "eps", 1e-5)};
}

EshaConfig esha_config(const json& config) {
  const json e = config.contains("esha") ? config.at("esha") : config;
  EshaConfig cfg;
  cfg.channels = need<int>(e, "channels", "esha config");
  cfg.query_dim = opt<int>(e, "query_dim", cfg.query_dim);
  cfg.key_dim = opt<int>(e, "key_dim", cfg.key_dim);
  cfg.ratio = opt<double>(e, "ratio", cfg.ratio);
  cfg.groups = opt<int>(e, "groups", cfg.groups);
  cfg.spatial_reduction = opt<int>(e, "sr", cfg.spatial_reduction);
  cfg.validate();
  return cfg;
}

TensorSet run_conv(const CaseInputs& in, const json& config, bool depthwise) {
  const Tensor x = in.tensor(0).to_tensor();
  const Tensor w = in.params.at("weight").to_tensor();
  const StoredTensor* bias = in.params.find("bias");
  const int groups = depthwise ? x.shape().c : opt<int>(config, "groups", 1);
  const ConvSpec spec(x.shape().c, w.shape().n, w.shape().h, w.shape().w, opt<int>(config, "stride", 1),
                      opt<int>(config, "padding", 0), groups, bias != nullptr);
  std::optional<std::span<const float>> b;
  if (bias) b = std::span<const float>(bias->values);
  return single(depthwise ? depthwise_conv2d(x, w, b, spec) : conv2d(x, w, b, spec));
}

using OpFn = std::function<TensorSet(const CaseInputs&, const json&)>;

const std::map<std::string, OpFn>& op_table() {
  static const std::map<std::string, OpFn> table = {
      {"conv2d", [](const CaseInputs& in, const json& c) { return run_conv(in, c, false); }},
      {"depthwise_conv2d", [](const CaseInputs& in, const json& c) { return run_conv(in, c, true); }},
      {"batch_norm2d",
       [](const CaseInputs& in, const json& c) {
         ParamReader r(in.params);
         const Tensor x = in.tensor(0).to_tensor();
         const BatchNormParams bn = r.batch_norm("", x.shape().c, opt<double>(c, "eps", 1e-5));
         r.finish();
         return single(batch_norm2d(x, bn));
       }},
      {"gelu", [](const CaseInputs& in, const json&) { return single(gelu(in.tensor(0).to_tensor())); }},
      {"softmax",
       [](const CaseInputs& in, const json&) { return single(softmax_lastdim(to_matrix(in.tensor(0)))); }},
      {"matmul",
       [](const CaseInputs& in, const json&) {
         return single(matmul(to_matrix(in.tensor(0)), to_matrix(in.tensor(1))));
       }},
      {"global_avg_pool",
       [](const CaseInputs& in, const json&) { return single(global_avg_pool(in.tensor(0).to_tensor())); }},
      {"channel_concat",
       [](const CaseInputs& in, const json&) {
         std::vector<Tensor> parts;
         for (const StoredTensor& t : in.tensors) parts.push_back(t.to_tensor());
         return single(channel_concat(parts));
       }},
      {"channel_split",
       [](const CaseInputs& in, const json& c) {
         const auto sizes = need<std::vector<int>>(c, "sizes", "channel_split config");
         const auto parts = channel_split(in.tensor(0).to_tensor(), sizes);
         TensorSet out;
         for (std::size_t i = 0; i < parts.size(); ++i) {
           out.insert("part" + std::to_string(i), StoredTensor::from_tensor(parts[i]));
         }
         return out;
       }},
      {"esha_project",
       [](const CaseInputs& in, const json& c) {
         const EshaConfig cfg = esha_config(c);
         ParamReader r(in.params);
         const EshaWeights w = load_esha(r, "", cfg, unit_options(c));
         r.finish();
         const EshaProjection p = esha_project(in.tensor(0).to_tensor(), w, cfg);
         TensorSet out;
         out.insert("q", StoredTensor::from_tensor(p.q));
         out.insert("k", StoredTensor::from_tensor(p.k));
         out.insert("v", StoredTensor::from_tensor(p.v));
         out.insert("u", StoredTensor::from_tensor(p.u));
         return out;
       }},
      {"spatial_reduce",
       [](const CaseInputs& in, const json& c) {
         const Tensor x = in.tensor(0).to_tensor();
         const int sr = need<int>(c, "sr", "spatial_reduce config");
         std::optional<ConvLayer> kernel;
         ParamReader r(in.params);
         if (sr > 1) kernel = r.conv("", esha_reduce_spec(x.shape().c, sr));
         r.finish();
         return single(spatial_reduce(x, kernel, sr));
       }},
      {"esha_attend",
       [](const CaseInputs& in, const json& c) {
         return single(esha_attend(in.tensor(0).to_tensor(), in.tensor(1).to_tensor(),
                                   in.tensor(2).to_tensor(), esha_config(c)));
       }},
      {"esha_forward",
       [](const CaseInputs& in, const json& c) {
         const EshaConfig cfg = esha_config(c);
         ParamReader r(in.params);
         const EshaWeights w = load_esha(r, "", cfg, unit_options(c));
         r.finish();
         return single(esha_forward(in.tensor(0).to_tensor(), w, cfg));
       }},
      {"ffn_forward",
       [](const CaseInputs& in, const json& c) {
         const Tensor x = in.tensor(0).to_tensor();
         ParamReader r(in.params);
         const FfnWeights w = load_ffn(r, "", x.shape().c, opt<int>(c, "alpha", 2), unit_options(c));
         r.finish();
         return single(ffn_forward(x, w));
       }},
      {"dwconv_mixer",
       [](const CaseInputs& in, const json& c) {
         const Tensor x = in.tensor(0).to_tensor();
         ParamReader r(in.params);
         const DwMixer m = load_dw_mixer(r, "", x.shape().c, unit_options(c));
         r.finish();
         return single(dwconv_mixer_forward(x, m));
       }},
      {"encoder_forward",
       [](const CaseInputs& in, const json& c) {
         const StageConfig stage = stage_from_json(need<json>(c, "stage", "encoder_forward config"));
         if (stage.mixer == MixerKind::kEsha) stage.esha().validate();
         ParamReader r(in.params);
         const EncoderBlock b = load_encoder(r, "", stage, opt<int>(c, "alpha", 2), unit_options(c));
         r.finish();
         return single(encoder_forward(in.tensor(0).to_tensor(), b));
       }},
      {"patch_embed",
       [](const CaseInputs& in, const json& c) {
         ParamReader r(in.params);
         const PatchEmbed pe =
             load_patch_embed(r, "", need<int>(c, "in", "patch_embed config"),
                              need<int>(c, "out", "patch_embed config"), opt<int>(c, "alpha", 2),
                              unit_options(c));
         r.finish();
         return single(patch_embed_forward(in.tensor(0).to_tensor(), pe));
       }},
      {"stem",
       [](const CaseInputs& in, const json& c) {
         const Tensor x = in.tensor(0).to_tensor();
         ParamReader r(in.params);
         const Stem s = load_stem(r, need<std::vector<int>>(c, "ramp", "stem config"), unit_options(c),
                                  x.shape().c);
         r.finish();
         return single(stem_forward(x, s));
       }},
      {"classifier_head",
       [](const CaseInputs& in, const json& c) {
         const Tensor x = in.tensor(0).to_tensor();
         ParamReader r(in.params);
         const ClassifierHead h = load_head(r, "fc", need<int>(c, "classes", "classifier_head config"),
                                            x.shape().c);
         r.finish();
         return single(classifier_head(x, h));
       }},
      {"model",
       [](const CaseInputs& in, const json&) {
         if (!in.params_path) throw ConfigError("model fixture: no .mvitw input");
         const Model m = load_model(*in.params_path);
         return single(Network(m.config, m.weights).forward(in.tensor(0).to_tensor()));
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& fixture_ops() {
  static const std::vector<std::string> ops = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : op_table()) v.push_back(name);
    return v;
  }();
  return ops;
}

Manifest parse_manifest(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("manifest: top level must be an object");
  Manifest m;
  m.version = need<int>(doc, "version", "manifest");
  if (m.version != kManifestVersion) {
    throw ConfigError("manifest: unsupported version " + std::to_string(m.version));
  }
  const json cases = need<json>(doc, "cases", "manifest");
  if (!cases.is_array()) throw ConfigError("manifest: 'cases' must be an array");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const json& c = cases[i];
    const std::string where = "manifest case " + std::to_string(i);
    if (!c.is_object()) throw ConfigError(where + ": not an object");
    FixtureCase fc;
    fc.name = need<std::string>(c, "name", where);
    fc.op = need<std::string>(c, "op", where);
    if (!op_table().contains(fc.op)) throw ConfigError(where + ": unknown op '" + fc.op + "'");
    if (c.contains("config")) {
      fc.config = c.at("config");
      if (!fc.config.is_object()) throw ConfigError(where + ": 'config' must be an object");
    }
    fc.inputs = need<std::vector<std::string>>(c, "inputs", where);
    fc.expected = need<std::string>(c, "expected", where);
    fc.rtol = need<double>(c, "rtol", where);
    fc.atol = need<double>(c, "atol", where);
    if (!(fc.rtol >= 0.0) || !(fc.atol >= 0.0)) throw ConfigError(where + ": negative tolerance");
    if (c.contains("seed")) fc.seed = need<std::uint64_t>(c, "seed", where);
    if (c.contains("checksums")) {
      const auto sums = need<std::map<std::string, std::string>>(c, "checksums", where);
      fc.checksums.assign(sums.begin(), sums.end());
    }
    m.cases.push_back(std::move(fc));
  }
  return m;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_checksum(const fs::path& path) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return buf;
}

Comparison compare(const StoredTensor& got, const StoredTensor& want, double rtol, double atol) {
  Comparison c;
  if (got.dims != want.dims) {
    auto fmt = [](const std::vector<std::uint32_t>& d) {
      std::string s = "[";
      for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
      return s + "]";
    };
    c.error = "shape " + fmt(got.dims) + " != expected " + fmt(want.dims);
    return c;
  }
  c.passed = true;
  for (std::size_t i = 0; i < got.values.size(); ++i) {
    const double a = got.values[i];
    const double e = want.values[i];
    const double diff = std::fabs(a - e);
    if (!std::isfinite(a) || !(diff <= atol + rtol * std::fabs(e))) c.passed = false;
    if (std::isfinite(diff)) {
      c.max_abs = std::max(c.max_abs, diff);
      if (e != 0.0) c.max_rel = std::max(c.max_rel, diff / std::fabs(e));
    } else {
      c.max_abs = c.max_rel = INFINITY;
    }
  }
  if (!c.passed) c.error = "values outside tolerance";
  return c;
}

Comparison compare(const TensorSet& got, const TensorSet& want, double rtol, double atol) {
  if (got.size() == 1 && want.size() == 1) {
    return compare(got.begin()->second, want.begin()->second, rtol, atol);
  }
  Comparison total;
  total.passed = true;
  if (got.size() != want.size()) {
    total.passed = false;
    total.error = "output count " + std::to_string(got.size()) + " != expected " + std::to_string(want.size());
    return total;
  }
  for (const auto& [name, expected] : want) {
    const StoredTensor* actual = got.find(name);
    if (!actual) {
      total.passed = false;
      total.error = "missing output '" + name + "'";
      return total;
    }
    const Comparison c = compare(*actual, expected, rtol, atol);
    total.max_abs = std::max(total.max_abs, c.max_abs);
    total.max_rel = std::max(total.max_rel, c.max_rel);
    if (!c.passed && total.passed) {
      total.passed = false;
      total.error = name + ": " + c.error;
    }
  }
  return total;
}

TensorSet run_fixture_op(const std::string& op, const json& config, const std::vector<fs::path>& inputs) {
  const auto it = op_table().find(op);
  if (it == op_table().end()) throw ConfigError("unknown fixture op '" + op + "'");
  return it->second(load_inputs(inputs), config);
}

VerifyReport verify_golden(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(manifest_path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  const Manifest manifest = parse_manifest(std::string(bytes.begin(), bytes.end()));

  VerifyReport report;
  for (const FixtureCase& fc : manifest.cases) {
    CaseResult result{fc.name, fc.op, {}};
    try {
      for (const auto& [file, sum] : fc.checksums) {
        if (const std::string actual = file_checksum(dir / file); actual != sum) {
          throw IoError(IoError::Kind::kMalformed, file + ": checksum " + actual + " != " + sum);
        }
      }
      std::vector<fs::path> inputs;
      for (const std::string& f : fc.inputs) inputs.push_back(dir / f);
      const TensorSet got = run_fixture_op(fc.op, fc.config, inputs);
      const fs::path expected = dir / fc.expected;
      result.cmp = compare(got, load_container(expected), fc.rtol, fc.atol);
    } catch (const std::exception& e) {
      result.cmp = Comparison{};
      result.cmp.error = e.what();
    }
    report.cases.push_back(std::move(result));
  }
  return report;
}

}  // namespace mvit
