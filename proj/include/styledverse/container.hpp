/* Copyright 2026 The Styledverse Authors. All Rights Reserved.

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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "styledverse/params.hpp"
#include "styledverse/tensor.hpp"

namespace styledverse {

/// Single-file tensor container.
///
///   bytes 0-3    magic "SVC1"
///   bytes 4-7    format version, u32 little-endian
///   bytes 8-15   header length in bytes, u64 little-endian
///   header       UTF-8 JSON {"metadata": {...}, "tensors": [{name, dtype, shape, byte_offset}]}
///   payload      row-major little-endian tensor data; byte_offset is relative
///                to the first payload byte
class ContainerError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, TruncatedPayload, DuplicateTensorName, Malformed, Io };
  ContainerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kContainerVersion = 1;

class TensorContainer {
 public:
  struct Entry {
    std::string name;
    Precision dtype = Precision::F32;
    Tensor value;
  };

  nlohmann::json metadata = nlohmann::json::object();

  /// Throws ContainerError(DuplicateTensorName) if the name is taken.
  void add(std::string name, Tensor value, Precision dtype);
  bool contains(std::string_view name) const;
  /// Throws ContainerError(Malformed) naming the missing tensor.
  const Tensor& get(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

std::string serialize_container(const TensorContainer& container);
TensorContainer parse_container(std::string_view bytes);

void save_container(const std::filesystem::path& path, const TensorContainer& container);
TensorContainer load_container(const std::filesystem::path& path);

}  // namespace styledverse
