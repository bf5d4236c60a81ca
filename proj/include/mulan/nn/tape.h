// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_TAPE_H_
#define MULAN_NN_TAPE_H_

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mulan/nn/tensor.h"

namespace mulan::nn {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Accumulated gradient; a zero tensor of the value's shape if none arrived.
  Tensor grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode tape. Ops append nodes in evaluation order;
// backward() walks them in reverse. One tape per forward pass; tapes are not
// shared between threads.
class Tape {
 public:
  // Called with the tape and the id of the node being differentiated.
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Trainable leaf owning its value.
  Var variable(Tensor value);
  // Trainable leaf viewing an externally owned tensor, which must outlive the
  // tape. Its gradient is reported by parameter_grads() under `name`.
  Var parameter(std::string name, const Tensor& value);

  // Appends an op node. `inputs` decides whether the node needs a gradient.
  // Throws NumericError if `value` holds NaN or Inf.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);

  const Tensor& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Gradient slot, zero-initialised on first access.
  Tensor& grad(int id);
  bool has_grad(int id) const { return nodes_[id].has_grad; }

  // Seeds d(root)/d(root) = 1; root must hold one element. A tape supports a
  // single backward pass.
  void backward(Var root);
  // Seeds the root's gradient with `seed` (same shape as its value).
  void backward(Var root, const Tensor& seed);

  // (name, gradient) for each bound parameter, in binding order.
  std::vector<std::pair<std::string, const Tensor*>> parameter_grads();

  std::size_t size() const { return nodes_.size(); }

  void note(std::string message) { diagnostics_.push_back(std::move(message)); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::string_view op;
    BackwardFn backward;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<std::pair<std::string, int>> parameters_;
  std::vector<std::string> diagnostics_;
  bool backward_done_ = false;
};

}  // namespace mulan::nn

#endif  // MULAN_NN_TAPE_H_
