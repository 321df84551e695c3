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

#ifndef EGOATTN_NN_TENSOR_H_
#define EGOATTN_NN_TENSOR_H_

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace egoattn {
namespace nn {

// Misuse of the API: shape mismatches, backward without a recorded forward.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite parameters, inputs or losses.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

// Dense row-major array.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  // Views with the leading dimensions folded into rows.
  MatrixMap AsMatrix();
  ConstMatrixMap AsMatrix() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::int64_t ShapeSize(const std::vector<int>& shape);

// Named parameters with their gradient accumulators, in creation order.
class ParameterStore {
 public:
  Tensor& Add(const std::string& name, std::vector<int> shape);

  bool Contains(const std::string& name) const {
    return index_.count(name) > 0;
  }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::int64_t Count() const;

  void ZeroGrad();
  // Copies values from a store with identical names and shapes.
  void CopyValuesFrom(const ParameterStore& other);
  bool AllFinite() const;

  friend bool SameValues(const ParameterStore& a, const ParameterStore& b);

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
  };
  const Entry& entry(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace nn
}  // namespace egoattn

#endif  // EGOATTN_NN_TENSOR_H_
