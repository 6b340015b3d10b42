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

#include "mvit/tensor_set.hpp"

#include "mvit/errors.hpp"

namespace mvit {

std::size_t StoredTensor::elements() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

Tensor StoredTensor::to_tensor() const {
  if (dims.size() > 4) throw ShapeError("to_tensor", "rank", 4, dims.size());
  int padded[4] = {1, 1, 1, 1};
  for (std::size_t i = 0; i < dims.size(); ++i) padded[i] = static_cast<int>(dims[i]);
  return Tensor(Shape{padded[0], padded[1], padded[2], padded[3]}, values);
}

StoredTensor StoredTensor::from_tensor(const Tensor& t, int rank) {
  const Shape& s = t.shape();
  const std::uint32_t all[4] = {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                                static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
  StoredTensor out;
  for (int i = 0; i < 4; ++i) {
    if (i >= rank && all[i] != 1) throw ShapeError("from_tensor", "rank", i + 1, rank);
    if (i < rank) out.dims.push_back(all[i]);
  }
  out.values = t.storage();
  return out;
}

StoredTensor StoredTensor::vector(std::vector<float> v) {
  StoredTensor out;
  out.dims = {static_cast<std::uint32_t>(v.size())};
  out.values = std::move(v);
  return out;
}

void TensorSet::insert(std::string name, StoredTensor t) {
  if (index_.count(name)) throw IoError(IoError::Kind::kDuplicateName, "duplicate tensor name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(t));
}

void TensorSet::insert_or_assign(std::string name, StoredTensor t) {
  if (auto* existing = find(name)) {
    *existing = std::move(t);
    return;
  }
  insert(std::move(name), std::move(t));
}

bool TensorSet::erase(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return false;
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(it->second));
  reindex();
  return true;
}

bool TensorSet::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

const StoredTensor* TensorSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

StoredTensor* TensorSet::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

const StoredTensor& TensorSet::at(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw StructureError("missing tensor '" + std::string(name) + "'");
}

std::size_t TensorSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.values.size();
  return n;
}

void TensorSet::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].first, i);
}

}  // namespace mvit
