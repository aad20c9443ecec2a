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

#include "styledverse/params.hpp"

#include <cmath>

#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"

namespace styledverse {

std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  throw InvalidArgument("unknown precision '" + s + "' (expected f32 or f64)");
}

bool operator==(const Parameter& a, const Parameter& b) { return a.name == b.name && a.value == b.value; }

std::size_t ParameterStore::add(std::string name, Tensor value) {
  if (by_name_.contains(name)) throw InvalidArgument("duplicate parameter name " + name);
  const std::size_t index = params_.size();
  by_name_.emplace(name, index);
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return index;
}

std::size_t ParameterStore::index(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw InvalidArgument("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::round_to_float() {
  for (auto& p : params_) p.value.round_to_float();
}

Gradients::Gradients(const ParameterStore& params) {
  grads_.reserve(params.size());
  for (const auto& p : params) grads_.emplace_back(p.value.shape());
}

void Gradients::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.grads_.size() != grads_.size()) throw ShapeError("gradient sets differ in parameter count");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    auto dst = grads_[i].data();
    auto src = other.grads_[i].data();
    if (dst.size() != src.size()) throw ShapeError("gradient shapes differ");
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  return *this;
}

void Gradients::scale(double factor) {
  for (auto& g : grads_) {
    for (double& x : g.data()) x *= factor;
  }
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  for (double& x : t.data()) x = rng.uniform(-bound, bound);
}

}  // namespace styledverse
