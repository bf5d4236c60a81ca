// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_PARAMETER_STORE_H_
#define MULAN_NN_PARAMETER_STORE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mulan/nn/tape.h"
#include "mulan/nn/tensor.h"

namespace mulan::nn {

struct AdamSlot {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t steps = 0;
};

using GradMap = std::map<std::string, Tensor>;

// Named trainable tensors plus their Adam state. Iteration order is the
// lexicographic name order, which fixes serialization and update order.
class ParameterStore {
 public:
  // Registers a parameter with zeroed optimizer state. Names must be unique.
  Tensor& add(const std::string& name, Tensor init);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  AdamSlot& adam(const std::string& name);
  const AdamSlot& adam(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;

  // Binds `name` onto `tape` as a trainable leaf viewing the stored value.
  Var bind(Tape& tape, const std::string& name) const;

  bool operator==(const ParameterStore& other) const;

 private:
  struct Entry {
    Tensor value;
    AdamSlot adam;
  };
  std::map<std::string, Entry> entries_;
};

// Sums `grads` into `into`, creating zero entries as needed.
void accumulate_grads(GradMap& into, const std::vector<std::pair<std::string, const Tensor*>>& grads);

}  // namespace mulan::nn

#endif  // MULAN_NN_PARAMETER_STORE_H_
