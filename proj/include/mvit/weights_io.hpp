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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvit/tensor_set.hpp"

namespace mvit {

// Container layout, all integers little-endian:
//   "MVIT" | u32 version (1) | u32 count |
//   count x { u16 name_len | name | u8 dtype (0 = f32) | u8 rank | u32 dims[rank] | payload }
inline constexpr char kContainerMagic[4] = {'M', 'V', 'I', 'T'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;
inline constexpr std::size_t kContainerHeaderBytes = 12;

/// Exact encoded size of `set`.
std::size_t container_size(const TensorSet& set);

std::vector<std::uint8_t> encode_container(const TensorSet& set);

/// Validates every header field against the buffer before returning.
/// Throws IoError with a kind per failure class.
TensorSet decode_container(std::span<const std::uint8_t> bytes);

void save_container(const TensorSet& set, const std::filesystem::path& path);
TensorSet load_container(const std::filesystem::path& path);

/// Single-tensor container (.mvt).
void save_tensor(const Tensor& t, const std::filesystem::path& path,
                 const std::string& name = "tensor", int rank = 4);
void save_stored_tensor(const StoredTensor& t, const std::filesystem::path& path,
                        const std::string& name = "tensor");
StoredTensor load_stored_tensor(const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mvit
