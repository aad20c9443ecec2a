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

#include "styledverse/tape.hpp"

#include <algorithm>
#include <cmath>

#include "styledverse/error.hpp"

namespace styledverse {

namespace {

void require(bool ok, Op op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

bool is_vector(const Tensor& t) { return t.rank() == 1; }
bool is_matrix(const Tensor& t) { return t.rank() == 2; }

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softmax: return "softmax";
    case Op::Concat: return "concat";
    case Op::Stack: return "stack";
    case Op::Slice: return "slice";
    case Op::EmbedLookup: return "embed_lookup";
    case Op::ReduceSum: return "reduce_sum";
    case Op::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

Var Tape::push(Node node) {
  node.value.check_finite(op_name(node.op));
  const auto input_needs = [this](std::int32_t i) { return i >= 0 && nodes_[static_cast<std::size_t>(i)].needs_grad; };
  node.needs_grad = node.op == Op::Param || input_needs(node.a) || input_needs(node.b) ||
                    std::any_of(node.many.begin(), node.many.end(), input_needs);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= nodes_.size()) {
    throw InvalidArgument("variable does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.index)];
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.op == Op::Param ? (*params_)[static_cast<std::size_t>(n.param)].value : n.value;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(std::size_t index) {
  if (params_ == nullptr || index >= params_->size()) {
    throw InvalidArgument("parameter index " + std::to_string(index) + " is not in the tape's store");
  }
  if (param_nodes_.size() < params_->size()) param_nodes_.resize(params_->size(), -1);
  if (param_nodes_[index] >= 0) return Var{param_nodes_[index]};
  Node n;
  n.op = Op::Param;
  n.param = static_cast<std::int32_t>(index);
  const Var v = push(std::move(n));
  param_nodes_[index] = v.index;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& w = value(b);
  require(is_matrix(w), Op::MatMul, "right operand must be a matrix, got " + to_string(w.shape()));
  require(x.rank() >= 1 && x.rank() <= 2 && x.cols() == w.rows(), Op::MatMul,
          "cannot multiply " + to_string(x.shape()) + " by " + to_string(w.shape()));
  const std::size_t m = x.rows();
  const std::size_t k = w.rows();
  const std::size_t n = w.cols();
  Tensor out(is_vector(x) ? Shape{n} : Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto out_row = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x.at(i, p);
      if (xv == 0.0) continue;
      const auto w_row = w.row(p);
      for (std::size_t j = 0; j < n; ++j) out_row[j] += xv * w_row[j];
    }
  }
  Node node;
  node.op = Op::MatMul;
  node.a = a.index;
  node.b = b.index;
  node.value = std::move(out);
  return push(std::move(node));
}

namespace {

template <typename F>
Tensor zip(const Tensor& x, const Tensor& y, Op op, F f) {
  require(x.shape() == y.shape(), op, "shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  return out;
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::Add;
  n.a = a.index, n.b = b.index;
  n.value = zip(value(a), value(b), Op::Add, [](double x, double y) { return x + y; });
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::Sub;
  n.a = a.index, n.b = b.index;
  n.value = zip(value(a), value(b), Op::Sub, [](double x, double y) { return x - y; });
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  Node n;
  n.op = Op::Mul;
  n.a = a.index, n.b = b.index;
  n.value = zip(value(a), value(b), Op::Mul, [](double x, double y) { return x * y; });
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n;
  n.op = Op::Scale;
  n.a = a.index;
  n.factor = factor;
  n.value = map(value(a), [factor](double x) { return x * factor; });
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a.index;
  n.value = map(value(a), [](double x) { return std::tanh(x); });
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.index;
  n.value = map(value(a), stable_sigmoid);
  return push(std::move(n));
}

Var Tape::softmax(Var a) {
  const Tensor& x = value(a);
  require(is_vector(x) && x.size() > 0, Op::Softmax, "expects a non-empty vector");
  const double peak = *std::max_element(x.data().begin(), x.data().end());
  Tensor out(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (out[i] = std::exp(x[i] - peak));
  for (double& v : out.data()) v /= total;
  Node n;
  n.op = Op::Softmax;
  n.a = a.index;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& parts) {
  require(!parts.empty(), Op::Concat, "needs at least one input");
  std::vector<double> data;
  Node n;
  n.op = Op::Concat;
  for (Var p : parts) {
    const Tensor& t = value(p);
    require(is_vector(t), Op::Concat, "inputs must be vectors, got " + to_string(t.shape()));
    data.insert(data.end(), t.data().begin(), t.data().end());
    n.many.push_back(p.index);
  }
  n.value = Tensor::vector(std::move(data));
  return push(std::move(n));
}

Var Tape::stack(const std::vector<Var>& rows) {
  require(!rows.empty(), Op::Stack, "needs at least one row");
  const std::size_t width = value(rows.front()).size();
  std::vector<double> data;
  data.reserve(width * rows.size());
  Node n;
  n.op = Op::Stack;
  for (Var r : rows) {
    const Tensor& t = value(r);
    require(is_vector(t) && t.size() == width, Op::Stack, "rows must be vectors of equal length");
    data.insert(data.end(), t.data().begin(), t.data().end());
    n.many.push_back(r.index);
  }
  n.value = Tensor({rows.size(), width}, std::move(data));
  return push(std::move(n));
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& x = value(a);
  require(is_vector(x) && offset + length <= x.size(), Op::Slice,
          "range [" + std::to_string(offset) + ", " + std::to_string(offset + length) + ") outside " +
              to_string(x.shape()));
  Node n;
  n.op = Op::Slice;
  n.a = a.index;
  n.aux = offset;
  n.value = Tensor::vector(std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(offset),
                                               x.data().begin() + static_cast<std::ptrdiff_t>(offset + length)));
  return push(std::move(n));
}

Var Tape::embed_lookup(Var table, std::size_t id) {
  const Tensor& t = value(table);
  require(is_matrix(t), Op::EmbedLookup, "table must be a matrix");
  if (id >= t.rows()) {
    throw InvalidArgument("embed_lookup: id " + std::to_string(id) + " out of range for " +
                          std::to_string(t.rows()) + " rows");
  }
  const auto r = t.row(id);
  Node n;
  n.op = Op::EmbedLookup;
  n.a = table.index;
  n.aux = id;
  n.value = Tensor::vector(std::vector<double>(r.begin(), r.end()));
  return push(std::move(n));
}

Var Tape::reduce_sum(Var a) {
  double total = 0.0;
  for (double x : value(a).data()) total += x;
  Node n;
  n.op = Op::ReduceSum;
  n.a = a.index;
  n.value = Tensor::scalar(total);
  return push(std::move(n));
}

Var Tape::cross_entropy(Var logits, std::size_t target) {
  const Tensor& x = value(logits);
  require(is_vector(x), Op::CrossEntropy, "logits must be a vector");
  if (target >= x.size()) throw InvalidArgument("cross_entropy: target out of range");
  const double peak = *std::max_element(x.data().begin(), x.data().end());
  double total = 0.0;
  for (double v : x.data()) total += std::exp(v - peak);
  Node n;
  n.op = Op::CrossEntropy;
  n.a = logits.index;
  n.aux = target;
  n.value = Tensor::scalar(peak + std::log(total) - x[target]);
  return push(std::move(n));
}

Gradients Tape::backward(Var loss) const {
  if (params_ == nullptr) throw InvalidArgument("backward needs a tape bound to a parameter store");
  Gradients grads(*params_);
  backward(loss, grads);
  return grads;
}

void Tape::backward(Var loss, Gradients& into) const {
  const Tensor& loss_value = value(loss);
  if (loss_value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + to_string(loss_value.shape()));
  }
  if (params_ != nullptr && into.size() != params_->size()) {
    throw ShapeError("backward: gradient set does not match the parameter store");
  }

  std::vector<Tensor> grads(nodes_.size());
  const auto grad_of = [&](std::int32_t i) -> Tensor& {
    Tensor& g = grads[static_cast<std::size_t>(i)];
    if (g.empty()) g = Tensor(value(Var{i}).shape());
    return g;
  };
  const auto wants = [&](std::int32_t i) { return i >= 0 && nodes_[static_cast<std::size_t>(i)].needs_grad; };

  grad_of(loss.index)[0] = 1.0;

  for (std::int32_t idx = loss.index; idx >= 0; --idx) {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    Tensor& dout = grads[static_cast<std::size_t>(idx)];
    if (dout.empty() || !n.needs_grad) continue;
    const Tensor& out = value(Var{idx});

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Param: {
        auto dst = into[static_cast<std::size_t>(n.param)].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += dout[i];
        break;
      }
      case Op::MatMul: {
        const Tensor& x = value(Var{n.a});
        const Tensor& w = value(Var{n.b});
        const std::size_t m = x.rows(), k = w.rows(), cols = w.cols();
        if (wants(n.a)) {
          Tensor& dx = grad_of(n.a);
          for (std::size_t i = 0; i < m; ++i) {
            const auto drow = dout.row(i);
            for (std::size_t p = 0; p < k; ++p) {
              const auto w_row = w.row(p);
              double acc = 0.0;
              for (std::size_t j = 0; j < cols; ++j) acc += drow[j] * w_row[j];
              dx.at(i, p) += acc;
            }
          }
        }
        if (wants(n.b)) {
          Tensor& dw = grad_of(n.b);
          for (std::size_t i = 0; i < m; ++i) {
            const auto drow = dout.row(i);
            for (std::size_t p = 0; p < k; ++p) {
              const double xv = x.at(i, p);
              if (xv == 0.0) continue;
              auto dw_row = dw.row(p);
              for (std::size_t j = 0; j < cols; ++j) dw_row[j] += xv * drow[j];
            }
          }
        }
        break;
      }
      case Op::Add:
      case Op::Sub: {
        const double sign_b = n.op == Op::Add ? 1.0 : -1.0;
        if (wants(n.a)) {
          Tensor& da = grad_of(n.a);
          for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
        }
        if (wants(n.b)) {
          Tensor& db = grad_of(n.b);
          for (std::size_t i = 0; i < dout.size(); ++i) db[i] += sign_b * dout[i];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& x = value(Var{n.a});
        const Tensor& y = value(Var{n.b});
        if (wants(n.a)) {
          Tensor& da = grad_of(n.a);
          for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * y[i];
        }
        if (wants(n.b)) {
          Tensor& db = grad_of(n.b);
          for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i] * x[i];
        }
        break;
      }
      case Op::Scale: {
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < dout.size(); ++i) da[i] += n.factor * dout[i];
        break;
      }
      case Op::Tanh: {
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * (1.0 - out[i] * out[i]);
        break;
      }
      case Op::Sigmoid: {
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * out[i] * (1.0 - out[i]);
        break;
      }
      case Op::Softmax: {
        double dot = 0.0;
        for (std::size_t i = 0; i < dout.size(); ++i) dot += dout[i] * out[i];
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < dout.size(); ++i) da[i] += out[i] * (dout[i] - dot);
        break;
      }
      case Op::Concat:
      case Op::Stack: {
        std::size_t offset = 0;
        for (std::int32_t part : n.many) {
          const std::size_t len = value(Var{part}).size();
          if (wants(part)) {
            Tensor& dp = grad_of(part);
            for (std::size_t i = 0; i < len; ++i) dp[i] += dout[offset + i];
          }
          offset += len;
        }
        break;
      }
      case Op::Slice: {
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < dout.size(); ++i) da[n.aux + i] += dout[i];
        break;
      }
      case Op::EmbedLookup: {
        auto row = grad_of(n.a).row(n.aux);
        for (std::size_t i = 0; i < dout.size(); ++i) row[i] += dout[i];
        break;
      }
      case Op::ReduceSum: {
        Tensor& da = grad_of(n.a);
        for (double& g : da.data()) g += dout[0];
        break;
      }
      case Op::CrossEntropy: {
        const Tensor& x = value(Var{n.a});
        const double peak = *std::max_element(x.data().begin(), x.data().end());
        double total = 0.0;
        for (double v : x.data()) total += std::exp(v - peak);
        Tensor& da = grad_of(n.a);
        for (std::size_t i = 0; i < x.size(); ++i) da[i] += dout[0] * std::exp(x[i] - peak) / total;
        da[n.aux] -= dout[0];
        break;
      }
    }
  }
}

}  // namespace styledverse
