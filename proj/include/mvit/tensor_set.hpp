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
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mvit/tensor.hpp"

namespace mvit {

/// A named array as it lives in a weight container: explicit rank and dims.
struct StoredTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t elements() const;
  int rank() const { return static_cast<int>(dims.size()); }

  /// Rank <= 4 arrays widen to N-C-H-W by padding trailing dims with 1.
  Tensor to_tensor() const;
  static StoredTensor from_tensor(const Tensor& t, int rank = 4);
  static StoredTensor vector(std::vector<float> v);

  friend bool operator==(const StoredTensor&, const StoredTensor&) = default;
};

/// Insertion-ordered map of unique names to arrays.
class TensorSet {
 public:
  using Entry = std::pair<std::string, StoredTensor>;

  /// Throws IoError(kDuplicateName) when `name` exists.
  void insert(std::string name, StoredTensor t);
  void insert_or_assign(std::string name, StoredTensor t);
  bool erase(std::string_view name);

  bool contains(std::string_view name) const;
  const StoredTensor* find(std::string_view name) const;
  StoredTensor* find(std::string_view name);
  /// Throws StructureError when missing.
  const StoredTensor& at(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_elements() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  friend bool operator==(const TensorSet& a, const TensorSet& b) { return a.entries_ == b.entries_; }

 private:
  void reindex();

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mvit
