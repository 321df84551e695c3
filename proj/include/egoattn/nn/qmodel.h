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

// The three Q-networks: a fully connected network on the padded feature
// list, a convolutional network on the occupancy grid, and the ego-attention
// network on the variable-size list.

#ifndef EGOATTN_NN_QMODEL_H_
#define EGOATTN_NN_QMODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "egoattn/nn/layers.h"
#include "egoattn/nn/tensor.h"
#include "egoattn/obs/observation.h"

namespace egoattn {
namespace nn {

inline constexpr int kNumOutputs = 3;

enum class ModelKind { kFcn, kCnn, kEgoAttention };

// "fcn_list", "cnn_grid", "ego_attention".
std::string ModelKindName(ModelKind kind);
// Throws std::invalid_argument for anything else.
ModelKind ParseModelKind(const std::string& name);

// Layer sizes; the defaults give 30,467 / 31,363 / 34,243 parameters.
struct Architecture {
  std::vector<int> fcn_hidden = {128, 128};
  std::vector<int> cnn_channels = {16, 32, 64};
  int cnn_hidden = 20;
  std::vector<int> encoder = {64, 64};  // the last size is d_x
  int heads = 2;
  int key_size = 32;  // d_k = d_v
  int attention_layers = 1;
  bool combination_bias = false;
  std::vector<int> decoder = {64, 64};

  // Throws UsageError for inconsistent sizes.
  void Validate(ModelKind kind) const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Model input for a minibatch, laid out for the batched kernels.
//   kFcn:          size x (15 * 7) padded lists
//   kCnn:          size x (32 * 32 * 7) dense grids
//   kEgoAttention: (size * rows) x 7 padded lists plus a size x rows mask
struct Batch {
  ModelKind kind = ModelKind::kFcn;
  int size = 0;
  int rows = 0;
  Matrix inputs;
  Matrix mask;
};

// Lists are zero-padded to what the model expects. For ego-attention, items
// are padded to the longest list in the batch and the mask is the presence
// column (the ego row always unmasked).
Batch MakeBatch(ModelKind kind,
                const std::vector<const obs::Observation*>& items);

struct QOutput {
  std::array<double, kNumOutputs> values{};
  std::optional<AttentionTrace> trace;  // ego-attention only
};

// Activations recorded by a forward pass for the matching backward pass.
// Tapes are per call and never shared.
class Tape {
 public:
  bool recorded() const { return recorded_; }

 private:
  friend class QModel;
  bool recorded_ = false;
  ModelKind kind_ = ModelKind::kFcn;
  int size_ = 0;
  int rows_ = 0;
  std::vector<Matrix> saved_;
};

class QModel {
 public:
  QModel(ModelKind kind, std::uint64_t seed, const Architecture& arch = {});

  ModelKind kind() const { return kind_; }
  const Architecture& architecture() const { return arch_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  std::int64_t ParamCount() const { return params_.Count(); }

  // Single observation through the reference operators in layers.h. Throws
  // NumericalError on non-finite parameters or inputs, UsageError when the
  // observation does not fit the model.
  QOutput QValues(const obs::Observation& observation) const;

  // Batched forward, size x 3. With `tape`, records what Backward needs.
  // For ego-attention, `traces` receives one trace per item with a weight
  // for every padded row (zero where masked).
  Matrix Forward(const Batch& batch, Tape* tape = nullptr,
                 std::vector<AttentionTrace>* traces = nullptr) const;

  // Accumulates d(loss)/d(parameter) into params().grad(...) given
  // d(loss)/d(output). Throws UsageError without a recorded tape.
  void Backward(const Tape& tape, const Matrix& grad_output);

 private:
  struct Dense {
    std::string weight;
    std::string bias;  // empty: no bias
  };
  struct Conv {
    std::string kernel;
    std::string bias;
    int in_channels;
    int out_channels;
  };
  struct AttentionLayer {
    std::vector<std::array<std::string, 3>> heads;  // query, key, value
    Dense combination;
  };

  std::vector<Dense> AddMlp(const std::string& prefix, int in,
                            const std::vector<int>& sizes, bool bias = true);
  void Initialize(std::uint64_t seed);
  void CheckFinite(const Matrix& inputs) const;

  Matrix DenseForward(const Dense& layer, const Matrix& x) const;
  Matrix DenseBackward(const Dense& layer, const Matrix& x, const Matrix& dy);
  // Hidden layers always use ReLU, the last one only with `relu_last`.
  // `saved` receives every layer input plus the final output.
  Matrix MlpForward(const std::vector<Dense>& layers, const Matrix& x,
                    bool relu_last, std::vector<Matrix>* saved) const;
  Matrix MlpBackward(const std::vector<Dense>& layers,
                     const std::vector<Matrix>& saved, Matrix dy,
                     bool relu_last);
  Matrix MlpReference(const std::vector<Dense>& layers, Matrix x,
                      bool relu_last) const;

  Matrix ForwardFcn(const Batch& batch, Tape* tape) const;
  Matrix ForwardCnn(const Batch& batch, Tape* tape) const;
  Matrix ForwardEgoAttention(const Batch& batch, Tape* tape,
                             std::vector<AttentionTrace>* traces) const;
  void BackwardFcn(const Tape& tape, const Matrix& grad_output);
  void BackwardCnn(const Tape& tape, const Matrix& grad_output);
  void BackwardEgoAttention(const Tape& tape, const Matrix& grad_output);

  ModelKind kind_;
  Architecture arch_;
  ParameterStore params_;
  std::vector<Dense> mlp_;  // FCN layers, or the CNN/decoder head
  std::vector<Conv> convs_;
  std::vector<Dense> ego_encoder_;
  std::vector<Dense> others_encoder_;
  std::vector<AttentionLayer> attention_;
};

}  // namespace nn
}  // namespace egoattn

#endif  // EGOATTN_NN_QMODEL_H_
