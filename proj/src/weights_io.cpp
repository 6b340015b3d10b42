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

#include "mvit/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mvit/errors.hpp"

namespace mvit {

static_assert(std::endian::native == std::endian::little,
              "weight containers assume a little-endian host");

const char* to_string(IoError::Kind kind) {
  switch (kind) {
    case IoError::Kind::kOpenFailed: return "open_failed";
    case IoError::Kind::kWriteFailed: return "write_failed";
    case IoError::Kind::kBadMagic: return "bad_magic";
    case IoError::Kind::kUnsupportedVersion: return "unsupported_version";
    case IoError::Kind::kUnsupportedDtype: return "unsupported_dtype";
    case IoError::Kind::kTruncated: return "truncated";
    case IoError::Kind::kTrailingBytes: return "trailing_bytes";
    case IoError::Kind::kDuplicateName: return "duplicate_name";
    case IoError::Kind::kMalformed: return "malformed";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kMaxRank = 8;

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }

  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  T get(const std::string& context) {
    T v;
    get_bytes(&v, sizeof(T), context);
    return v;
  }
  void get_bytes(void* dst, std::size_t n, const std::string& context) {
    if (remaining() < n) {
      throw IoError(IoError::Kind::kTruncated,
                    "container truncated while reading " + context + " (need " +
                        std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_entry(const std::string& name, const StoredTensor& t) {
  if (name.empty() || name.size() > 0xFFFF) {
    throw IoError(IoError::Kind::kMalformed, "tensor name length must be in [1, 65535]");
  }
  if (t.dims.empty() || t.dims.size() > kMaxRank) {
    throw IoError(IoError::Kind::kMalformed, "tensor '" + name + "' has unsupported rank");
  }
  if (t.values.size() != t.elements()) {
    throw IoError(IoError::Kind::kMalformed,
                  "tensor '" + name + "' payload does not match its dims");
  }
}

}  // namespace

std::size_t container_size(const TensorSet& set) {
  std::size_t n = kContainerHeaderBytes;
  for (const auto& [name, t] : set) n += 2 + name.size() + 2 + 4 * t.dims.size() + 4 * t.values.size();
  return n;
}

std::vector<std::uint8_t> encode_container(const TensorSet& set) {
  Writer w(container_size(set));
  w.put_bytes(kContainerMagic, 4);
  w.put<std::uint32_t>(kContainerVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.size()));
  for (const auto& [name, t] : set) {
    check_entry(name, t);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint8_t>(kDtypeF32);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) w.put<std::uint32_t>(d);
    w.put_bytes(t.values.data(), 4 * t.values.size());
  }
  return w.take();
}

TensorSet decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4, "magic");
  if (std::memcmp(magic, kContainerMagic, 4) != 0) {
    throw IoError(IoError::Kind::kBadMagic, "not a weight container (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw IoError(IoError::Kind::kUnsupportedVersion,
                  "unsupported container version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("tensor count");

  TensorSet set;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string slot = "tensor #" + std::to_string(i);
    const auto name_len = r.get<std::uint16_t>(slot + " name length");
    if (name_len == 0) throw IoError(IoError::Kind::kMalformed, slot + " has an empty name");
    std::string name(name_len, '\0');
    r.get_bytes(name.data(), name_len, slot + " name");
    const std::string label = "tensor '" + name + "'";

    const auto dtype = r.get<std::uint8_t>(label + " dtype");
    if (dtype != kDtypeF32) {
      throw IoError(IoError::Kind::kUnsupportedDtype,
                    label + " has unsupported dtype " + std::to_string(dtype));
    }
    const auto rank = r.get<std::uint8_t>(label + " rank");
    if (rank == 0 || rank > kMaxRank) {
      throw IoError(IoError::Kind::kMalformed, label + " has unsupported rank " + std::to_string(rank));
    }
    StoredTensor t;
    t.dims.resize(rank);
    std::size_t elements = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.dims[d] = r.get<std::uint32_t>(label + " dims");
      if (t.dims[d] == 0) throw IoError(IoError::Kind::kMalformed, label + " has a zero dim");
      // Bound by the bytes left so a hostile header can't overflow the product.
      if (elements > r.remaining() / 4 / t.dims[d]) {
        throw IoError(IoError::Kind::kTruncated,
                      "truncated payload for " + label + ": declared dims exceed file size");
      }
      elements *= t.dims[d];
    }
    if (r.remaining() < 4 * elements) {
      throw IoError(IoError::Kind::kTruncated, "truncated payload for " + label);
    }
    t.values.resize(elements);
    r.get_bytes(t.values.data(), 4 * elements, label + " payload");
    if (set.contains(name)) {
      throw IoError(IoError::Kind::kDuplicateName, "duplicate tensor name '" + name + "'");
    }
    set.insert(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) {
    throw IoError(IoError::Kind::kTrailingBytes,
                  std::to_string(r.remaining()) + " trailing bytes after last tensor");
  }
  return set;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(IoError::Kind::kWriteFailed, "write failed: " + path.string());
}

void save_container(const TensorSet& set, const std::filesystem::path& path) {
  write_file(path, encode_container(set));
}

TensorSet load_container(const std::filesystem::path& path) {
  return decode_container(read_file(path));
}

void save_stored_tensor(const StoredTensor& t, const std::filesystem::path& path,
                        const std::string& name) {
  TensorSet set;
  set.insert(name, t);
  save_container(set, path);
}

void save_tensor(const Tensor& t, const std::filesystem::path& path, const std::string& name,
                 int rank) {
  save_stored_tensor(StoredTensor::from_tensor(t, rank), path, name);
}

StoredTensor load_stored_tensor(const std::filesystem::path& path) {
  TensorSet set = load_container(path);
  if (set.size() != 1) {
    throw IoError(IoError::Kind::kMalformed,
                  path.string() + ": expected exactly one tensor, found " + std::to_string(set.size()));
  }
  return set.begin()->second;
}

Tensor load_tensor(const std::filesystem::path& path) {
  const StoredTensor t = load_stored_tensor(path);
  if (t.rank() > 4) throw IoError(IoError::Kind::kMalformed, path.string() + ": rank > 4");
  return t.to_tensor();
}

}  // namespace mvit
