// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/tape.h"

#include "mulan/error.h"

namespace mulan::nn {

const Tensor& Var::value() const { return tape_->value(id_); }

Tensor Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad(id_);
  return Tensor(value().shape());
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.op = "constant";
  return push(std::move(node));
}

Var Tape::variable(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  node.op = "variable";
  return push(std::move(node));
}

Var Tape::parameter(std::string name, const Tensor& value) {
  Node node;
  node.external = &value;
  node.requires_grad = true;
  node.op = "parameter";
  Var v = push(std::move(node));
  parameters_.emplace_back(std::move(name), v.id());
  return v;
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node node;
  node.value = std::move(value);
  node.op = op;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw GraphError(std::string(op) + ": input from another tape");
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.value().size() != 1) {
    throw GraphError("backward() without a seed needs a scalar root, got " +
                     shape_string(root.shape()));
  }
  backward(root, Tensor(root.shape(), 1.0));
}

void Tape::backward(Var root, const Tensor& seed) {
  if (root.tape_ != this) throw GraphError("backward root belongs to another tape");
  if (seed.shape() != root.shape()) {
    throw GraphError("backward seed shape " + shape_string(seed.shape()) +
                     " does not match root " + shape_string(root.shape()));
  }
  if (backward_done_) throw StateError("tape already ran backward");
  backward_done_ = true;
  if (!nodes_[root.id_].requires_grad) return;
  Tensor& g = grad(root.id_);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (int id = root.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

std::vector<std::pair<std::string, const Tensor*>> Tape::parameter_grads() {
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(parameters_.size());
  for (const auto& [name, id] : parameters_) {
    out.emplace_back(name, &grad(id));
  }
  return out;
}

}  // namespace mulan::nn
