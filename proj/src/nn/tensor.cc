// Copyright 2026 The egoattn Authors.
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

#include "egoattn/nn/tensor.h"

#include <algorithm>
#include <cmath>

namespace egoattn {
namespace nn {

std::int64_t ShapeSize(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw UsageError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> s)
    : shape(std::move(s)), data(ShapeSize(shape), 0.0) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (ShapeSize(shape) != static_cast<std::int64_t>(data.size())) {
    throw UsageError("tensor data does not match its shape");
  }
}

MatrixMap Tensor::AsMatrix() {
  const int cols = shape.empty() ? 1 : shape.back();
  return MatrixMap(data.data(), static_cast<Eigen::Index>(data.size() / cols),
                   cols);
}

ConstMatrixMap Tensor::AsMatrix() const {
  const int cols = shape.empty() ? 1 : shape.back();
  return ConstMatrixMap(data.data(),
                        static_cast<Eigen::Index>(data.size() / cols), cols);
}

Tensor& ParameterStore::Add(const std::string& name, std::vector<int> shape) {
  if (Contains(name)) throw UsageError("duplicate parameter " + name);
  index_[name] = entries_.size();
  names_.push_back(name);
  Tensor value(shape);
  Tensor grad(std::move(shape));
  entries_.push_back({std::move(value), std::move(grad)});
  return entries_.back().value;
}

const ParameterStore::Entry& ParameterStore::entry(
    const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + name);
  return entries_[it->second];
}

Tensor& ParameterStore::value(const std::string& name) {
  return const_cast<Tensor&>(entry(name).value);
}
const Tensor& ParameterStore::value(const std::string& name) const {
  return entry(name).value;
}
Tensor& ParameterStore::grad(const std::string& name) {
  return const_cast<Tensor&>(entry(name).grad);
}
const Tensor& ParameterStore::grad(const std::string& name) const {
  return entry(name).grad;
}

std::int64_t ParameterStore::Count() const {
  std::int64_t n = 0;
  for (const Entry& e : entries_) n += e.value.size();
  return n;
}

void ParameterStore::ZeroGrad() {
  for (Entry& e : entries_)
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

void ParameterStore::CopyValuesFrom(const ParameterStore& other) {
  if (other.names_ != names_)
    throw UsageError("parameter stores differ in layout");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].value.shape != other.entries_[k].value.shape) {
      throw UsageError("parameter " + names_[k] + " differs in shape");
    }
    entries_[k].value.data = other.entries_[k].value.data;
  }
}

bool ParameterStore::AllFinite() const {
  for (const Entry& e : entries_) {
    for (double x : e.value.data) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

bool SameValues(const ParameterStore& a, const ParameterStore& b) {
  if (a.names_ != b.names_) return false;
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    if (!(a.entries_[k].value == b.entries_[k].value)) return false;
  }
  return true;
}

}  // namespace nn
}  // namespace egoattn
