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
#include <vector>

#include "styledverse/params.hpp"
#include "styledverse/tensor.hpp"

namespace styledverse {

/// Handle to a value recorded on a Tape.
struct Var {
  std::int32_t index = -1;
  bool valid() const { return index >= 0; }
};

enum class Op : std::uint8_t {
  Leaf,
  Param,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Tanh,
  Sigmoid,
  Softmax,
  Concat,
  Stack,
  Slice,
  EmbedLookup,
  ReduceSum,
  CrossEntropy,
};

const char* op_name(Op op);

/// Records primitive applications in execution order and replays them in
/// reverse to accumulate gradients. A tape is a single-threaded builder;
/// parameter values are referenced, not copied, so the store must outlive it.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const ParameterStore& params) : params_(&params) {}

  Var constant(Tensor value);
  /// Leaf bound to parameter `index`. Repeated calls return the same node.
  Var param(std::size_t index);

  /// (k) x (k,n) -> (n), or (m,k) x (k,n) -> (m,n).
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  Var sigmoid(Var a);
  /// Softmax over the last axis of a vector.
  Var softmax(Var a);
  /// Concatenates vectors end to end.
  Var concat(const std::vector<Var>& parts);
  /// Stacks equal-length vectors as the rows of a matrix.
  Var stack(const std::vector<Var>& rows);
  /// Elements [offset, offset + length) of a vector.
  Var slice(Var a, std::size_t offset, std::size_t length);
  /// Row `id` of a matrix as a vector.
  Var embed_lookup(Var table, std::size_t id);
  Var reduce_sum(Var a);
  /// -log softmax(logits)[target], computed stably from raw logits.
  Var cross_entropy(Var logits, std::size_t target);

  const Tensor& value(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Reverse accumulation from a scalar loss. Gradients of parameters that
  /// never appeared on the tape stay zero.
  Gradients backward(Var loss) const;
  /// Adds this tape's gradients into `into`.
  void backward(Var loss, Gradients& into) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::vector<std::int32_t> many;
    std::size_t aux = 0;
    double factor = 0.0;
    bool needs_grad = false;
    std::int32_t param = -1;
    Tensor value;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  const ParameterStore* params_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> param_nodes_;
};

}  // namespace styledverse
