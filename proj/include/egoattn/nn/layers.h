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

// Single-example forward operators. The Q-networks use them for inference on
// one observation; training goes through the batched code in qmodel.cc.

#ifndef EGOATTN_NN_LAYERS_H_
#define EGOATTN_NN_LAYERS_H_

#include <vector>

#include "egoattn/nn/tensor.h"

namespace egoattn {
namespace nn {

// input * weight + bias, with the bias broadcast over rows. A zero-length
// bias means none.
Matrix Affine(const Matrix& input, const Matrix& weight,
              const RowVector& bias = {});

void ReluInPlace(Matrix& x);

// Max-subtracted softmax. -inf entries map to exactly 0; all -inf is a
// UsageError.
Eigen::VectorXd Softmax(const Eigen::VectorXd& scores);

// Valid 2x2 convolution with stride 2 on an H x W x C input; `kernel` has
// shape {2, 2, C, O}, `bias` shape {O}. Returns H/2 x W/2 x O.
Tensor Conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

// d_x x d_k projections of one head.
struct HeadWeights {
  Matrix query;
  Matrix key;
  Matrix value;
};

struct HeadResult {
  RowVector output;         // d_k
  Eigen::VectorXd weights;  // one per row of the embeddings
};

// Only the ego emits a query; every row, the ego's included, provides a key
// and a value. Scores are scaled by 1/sqrt(d_k).
HeadResult AttentionHead(const RowVector& ego, const Matrix& embeddings,
                         const HeadWeights& weights);

struct AttentionWeights {
  std::vector<HeadWeights> heads;
  Matrix combination;          // (heads * d_k) x d_x
  RowVector combination_bias;  // empty when the layer has none
};

// Attention weights per head over the ego and the other vehicles, in row
// order of the embeddings.
struct AttentionTrace {
  std::vector<std::vector<double>> heads;
};

struct EgoAttentionResult {
  RowVector ego_feature;
  AttentionTrace trace;
};

// Heads concatenated, combined linearly and added to the ego embedding (row
// 0 of `embeddings`).
EgoAttentionResult EgoAttentionForward(const Matrix& embeddings,
                                       const AttentionWeights& weights);

}  // namespace nn
}  // namespace egoattn

#endif  // EGOATTN_NN_LAYERS_H_
