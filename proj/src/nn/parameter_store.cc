// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/parameter_store.h"

#include "mulan/error.h"
#include "mulan/simd/kernels.h"

namespace mulan::nn {

Tensor& ParameterStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw StateError("duplicate parameter name: " + name);
  Entry entry;
  entry.adam.first_moment = Tensor(init.shape());
  entry.adam.second_moment = Tensor(init.shape());
  entry.value = std::move(init);
  return entries_.emplace(name, std::move(entry)).first->second.value;
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StateError("unknown parameter: " + name);
  return it->second.value;
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StateError("unknown parameter: " + name);
  return it->second.value;
}

AdamSlot& ParameterStore::adam(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StateError("unknown parameter: " + name);
  return it->second.adam;
}

const AdamSlot& ParameterStore::adam(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StateError("unknown parameter: " + name);
  return it->second.adam;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, entry] : entries_) n += entry.value.size();
  return n;
}

Var ParameterStore::bind(Tape& tape, const std::string& name) const {
  return tape.parameter(name, value(name));
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value) ||
        !(a->second.adam.first_moment == b->second.adam.first_moment) ||
        !(a->second.adam.second_moment == b->second.adam.second_moment) ||
        a->second.adam.steps != b->second.adam.steps) {
      return false;
    }
  }
  return true;
}

void accumulate_grads(GradMap& into,
                      const std::vector<std::pair<std::string, const Tensor*>>& grads) {
  for (const auto& [name, grad] : grads) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, *grad);
      continue;
    }
    if (it->second.shape() != grad->shape()) {
      throw GraphError("gradient shape changed for " + name);
    }
    simd::active().axpy(1.0, grad->raw(), it->second.raw(), grad->size());
  }
}

}  // namespace mulan::nn
