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

#include "styledverse/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace styledverse {

namespace {

constexpr std::string_view kMagic = "SVC1";
constexpr std::size_t kPreamble = 16;

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::size_t width(Precision p) { return p == Precision::F32 ? 4 : 8; }

[[noreturn]] void malformed(const std::string& what) {
  throw ContainerError(ContainerError::Kind::Malformed, "malformed container: " + what);
}

}  // namespace

void TensorContainer::add(std::string name, Tensor value, Precision dtype) {
  if (contains(name)) {
    throw ContainerError(ContainerError::Kind::DuplicateTensorName, "duplicate tensor name " + name);
  }
  entries_.push_back(Entry{std::move(name), dtype, std::move(value)});
}

bool TensorContainer::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

const Tensor& TensorContainer::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  malformed("missing tensor " + std::string(name));
}

std::string serialize_container(const TensorContainer& container) {
  nlohmann::json index = nlohmann::json::array();
  std::string payload;
  for (const auto& e : container.entries()) {
    index.push_back({{"name", e.name},
                     {"dtype", to_string(e.dtype)},
                     {"shape", e.value.shape()},
                     {"byte_offset", payload.size()}});
    for (double x : e.value.data()) {
      if (e.dtype == Precision::F32) {
        put_le(payload, static_cast<float>(x));
      } else {
        put_le(payload, x);
      }
    }
  }
  const nlohmann::json header{{"metadata", container.metadata}, {"tensors", index}};
  const std::string header_text = header.dump();

  std::string out(kMagic);
  put_le(out, kContainerVersion);
  put_le(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  out += payload;
  return out;
}

TensorContainer parse_container(std::string_view bytes) {
  using Kind = ContainerError::Kind;
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw ContainerError(Kind::BadMagic, "not a tensor container (bad magic)");
  }
  if (bytes.size() < kPreamble) throw ContainerError(Kind::TruncatedPayload, "container preamble is truncated");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kContainerVersion) {
    throw ContainerError(Kind::UnsupportedVersion, "unsupported container version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kPreamble) {
    throw ContainerError(Kind::TruncatedPayload, "container header runs past end of file");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPreamble, header_len));
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("tensors") || !header["tensors"].is_array()) {
    malformed("header lacks a tensor index");
  }

  const std::string_view payload = bytes.substr(kPreamble + header_len);
  TensorContainer container;
  if (header.contains("metadata")) container.metadata = header["metadata"];

  std::set<std::string> names;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  try {
    for (const auto& item : header["tensors"]) {
      const auto name = item.at("name").get<std::string>();
      const auto dtype_name = item.at("dtype").get<std::string>();
      if (dtype_name != "f32" && dtype_name != "f64") malformed("tensor " + name + " has unknown dtype " + dtype_name);
      const Precision dtype = parse_precision(dtype_name);
      const auto shape = item.at("shape").get<Shape>();
      const auto offset = item.at("byte_offset").get<std::uint64_t>();
      if (!names.insert(name).second) {
        throw ContainerError(Kind::DuplicateTensorName, "duplicate tensor name " + name);
      }
      const std::size_t count = element_count(shape);
      const std::size_t nbytes = count * width(dtype);
      if (offset > payload.size() || nbytes > payload.size() - offset) {
        throw ContainerError(Kind::TruncatedPayload, "tensor " + name + " extends past end of payload");
      }
      for (const auto& [lo, hi] : ranges) {
        if (nbytes > 0 && offset < hi && lo < offset + nbytes) malformed("tensor " + name + " overlaps another");
      }
      ranges.emplace_back(offset, offset + nbytes);

      std::vector<double> data(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = offset + i * width(dtype);
        data[i] = dtype == Precision::F32 ? static_cast<double>(get_le<float>(payload, at)) : get_le<double>(payload, at);
      }
      container.add(name, Tensor(shape, std::move(data)), dtype);
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("bad tensor index entry: ") + e.what());
  }
  return container;
}

void save_container(const std::filesystem::path& path, const TensorContainer& container) {
  const std::string bytes = serialize_container(container);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContainerError(ContainerError::Kind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ContainerError(ContainerError::Kind::Io, "write failure on " + path.string());
}

TensorContainer load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError(ContainerError::Kind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_container(buffer.str());
}

}  // namespace styledverse
