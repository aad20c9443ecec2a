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
#include <map>
#include <string>
#include <vector>

#include "styledverse/tensor.hpp"

namespace styledverse {

/// Storage precision of trained values. Arithmetic always runs in double;
/// F32 rounds stored parameters to float after initialization and updates.
enum class Precision { F32, F64 };

std::string to_string(Precision p);
Precision parse_precision(const std::string& s);

struct Parameter {
  std::string name;
  Tensor value;
};

/// Named, ordered collection of trainable tensors.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  /// Throws InvalidArgument for an unknown name.
  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.contains(name); }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;
  void round_to_float();

  bool operator==(const ParameterStore& other) const { return params_ == other.params_; }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> by_name_;
};

bool operator==(const Parameter& a, const Parameter& b);

/// Per-parameter gradients aligned with a ParameterStore.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterStore& params);

  std::size_t size() const { return grads_.size(); }
  Tensor& operator[](std::size_t i) { return grads_[i]; }
  const Tensor& operator[](std::size_t i) const { return grads_[i]; }

  void zero();
  Gradients& operator+=(const Gradients& other);
  void scale(double factor);

 private:
  std::vector<Tensor> grads_;
};

/// Fills every element uniformly on +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

}  // namespace styledverse
