// Copyright 2026 The EventGraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over a tape of dense tensors.
//
// A Tape records every intermediate value of one forward pass together with
// a closure that propagates gradients to the op's inputs. Parameters live in
// a ParamStore that outlives the tapes reading it; a tape never writes
// parameter values, so any number of tapes can read one store concurrently.
// After backward() a tape hands out its parameter gradients as a
// GradientSet, which callers reduce in a fixed order.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evgraph/tensor.hpp"

namespace evgraph {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  int group = 0;
};

template <typename Real>
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor<Real> init, int group) {
    if (by_name_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    by_name_.emplace(name, params_.size());
    params_.push_back(Parameter<Real>{std::move(name), std::move(init), group});
    return params_.size() - 1;
  }

  std::size_t index(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return by_name_.contains(name); }

  std::size_t size() const { return params_.size(); }
  Parameter<Real>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<Real>& operator[](std::size_t i) const { return params_[i]; }
  Parameter<Real>& at(const std::string& name) { return params_[index(name)]; }
  const Parameter<Real>& at(const std::string& name) const { return params_[index(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::vector<Parameter<Real>> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

template <typename Real>
struct SparseRow {
  std::size_t param = 0;
  std::size_t row = 0;
  std::vector<Real> values;
};

// Gradient contributions of one tape.
template <typename Real>
struct GradientSet {
  std::vector<std::pair<std::size_t, Tensor<Real>>> dense;
  std::vector<SparseRow<Real>> sparse;

  // total[p] += scale * g, dense entries first, then sparse rows in the
  // order they were recorded.
  void add_to(std::vector<Tensor<Real>>& total, Real scale) const {
    for (const auto& [p, g] : dense) {
      Real* dst = total[p].ptr();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * g.data[i];
    }
    for (const SparseRow<Real>& r : sparse) {
      const std::size_t cols = r.values.size();
      Real* dst = total[r.param].ptr() + r.row * cols;
      for (std::size_t i = 0; i < cols; ++i) dst[i] += scale * r.values[i];
    }
  }
};

template <typename Real>
class Tape {
 public:
  // Receives the tape and the node's own handle.
  using Backward = std::function<void(Tape&, Var)>;

  // With record_grads off, parameters are treated as constants and no
  // backward closures are kept.
  explicit Tape(const ParamStore<Real>* params = nullptr, bool record_grads = true)
      : params_(params), record_grads_(record_grads) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const ParamStore<Real>& params() const { return *params_; }

  Var constant(Tensor<Real> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  // One node per parameter per tape.
  Var param(std::size_t index) {
    auto it = param_nodes_.find(index);
    if (it != param_nodes_.end()) return it->second;
    Node n;
    n.ref = &(*params_)[index].value;
    n.param = static_cast<long>(index);
    n.needs_grad = record_grads_;
    const Var v = push(std::move(n));
    param_nodes_.emplace(index, v);
    return v;
  }
  Var param(const std::string& name) { return param(params_->index(name)); }

  Var record(Tensor<Real> value, std::initializer_list<Var> inputs, Backward backward) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(backward));
  }
  Var record(Tensor<Real> value, const std::vector<Var>& inputs, Backward backward) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(backward));
  }

  const Tensor<Real>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }
  const Shape& shape(Var v) const { return value(v).shape; }

  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Zero-initialized on first access.
  Tensor<Real>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty() && !value(v).empty()) n.grad = Tensor<Real>(value(v).shape);
    return n.grad;
  }
  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  void add_sparse_row(std::size_t param, std::size_t row, const Real* values,
                      std::size_t n) {
    sparse_.push_back(SparseRow<Real>{param, row, std::vector<Real>(values, values + n)});
  }

  // Seeds d(root)/d(root) = 1; root must hold a single element.
  void backward(Var root) {
    if (value(root).size() != 1)
      throw ShapeError("backward root must be a scalar, got " + shape_str(shape(root)));
    grad(root).data[0] = Real(1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.backward && !n.grad.empty()) n.backward(*this, Var{id});
    }
  }

  GradientSet<Real> gradients() const {
    GradientSet<Real> out;
    for (const Node& n : nodes_)
      if (n.param >= 0 && !n.grad.empty())
        out.dense.emplace_back(static_cast<std::size_t>(n.param), n.grad);
    out.sparse = sparse_;
    return out;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Real> value;
    const Tensor<Real>* ref = nullptr;
    Tensor<Real> grad;
    Backward backward;
    long param = -1;
    bool needs_grad = false;
  };

  template <typename It>
  Var record_impl(Tensor<Real> value, It first, It last, Backward backward) {
    Node n;
    n.value = std::move(value);
    for (It it = first; it != last; ++it)
      n.needs_grad = n.needs_grad || nodes_[it->id].needs_grad;
    if (n.needs_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const ParamStore<Real>* params_;
  bool record_grads_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, Var> param_nodes_;
  std::vector<SparseRow<Real>> sparse_;
};

}  // namespace evgraph
