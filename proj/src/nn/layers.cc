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

#include "egoattn/nn/layers.h"

#include <cmath>
#include <limits>
#include <string>

namespace egoattn {
namespace nn {

Matrix Affine(const Matrix& input, const Matrix& weight,
              const RowVector& bias) {
  if (input.cols() != weight.rows()) {
    throw UsageError("affine: input has " + std::to_string(input.cols()) +
                     " columns, weight expects " +
                     std::to_string(weight.rows()));
  }
  if (bias.size() != 0 && bias.size() != weight.cols()) {
    throw UsageError("affine: bias size mismatch");
  }
  Matrix out = input * weight;
  if (bias.size() != 0) out.rowwise() += bias;
  return out;
}

void ReluInPlace(Matrix& x) { x = x.cwiseMax(0.0); }

Eigen::VectorXd Softmax(const Eigen::VectorXd& scores) {
  const double max = scores.size() == 0
                         ? -std::numeric_limits<double>::infinity()
                         : scores.maxCoeff();
  if (max == -std::numeric_limits<double>::infinity()) {
    throw UsageError("softmax: every score is masked");
  }
  // Vectorized exp may return a denormal for -inf; masking must be exact.
  Eigen::VectorXd out =
      (scores.array() == -std::numeric_limits<double>::infinity())
          .select(0.0, (scores.array() - max).exp());
  out /= out.sum();
  return out;
}

Tensor Conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  if (input.shape.size() != 3 || kernel.shape.size() != 4 ||
      bias.shape.size() != 1) {
    throw UsageError("conv2d: expected H x W x C input, 2 x 2 x C x O kernel");
  }
  const int h = input.shape[0];
  const int w = input.shape[1];
  const int c = input.shape[2];
  const int o = kernel.shape[3];
  if (h % 2 != 0 || w % 2 != 0) throw UsageError("conv2d: odd spatial size");
  if (kernel.shape[0] != 2 || kernel.shape[1] != 2 || kernel.shape[2] != c ||
      bias.shape[0] != o) {
    throw UsageError("conv2d: kernel or bias shape mismatch");
  }
  Tensor out({h / 2, w / 2, o});
  for (int oi = 0; oi < h / 2; ++oi) {
    for (int oj = 0; oj < w / 2; ++oj) {
      for (int oc = 0; oc < o; ++oc) {
        double sum = bias.data[oc];
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const double* x =
                &input.data[((2 * oi + di) * w + (2 * oj + dj)) * c];
            const double* k = &kernel.data[((di * 2 + dj) * c) * o + oc];
            for (int ic = 0; ic < c; ++ic) sum += x[ic] * k[ic * o];
          }
        }
        out.data[(oi * (w / 2) + oj) * o + oc] = sum;
      }
    }
  }
  return out;
}

HeadResult AttentionHead(const RowVector& ego, const Matrix& embeddings,
                         const HeadWeights& weights) {
  const RowVector query = ego * weights.query;
  const Matrix keys = embeddings * weights.key;
  const Matrix values = embeddings * weights.value;
  const double scale = 1.0 / std::sqrt(static_cast<double>(weights.key.cols()));
  const Eigen::VectorXd scores = (keys * query.transpose()) * scale;
  HeadResult result;
  result.weights = Softmax(scores);
  result.output = result.weights.transpose() * values;
  return result;
}

EgoAttentionResult EgoAttentionForward(const Matrix& embeddings,
                                       const AttentionWeights& weights) {
  const RowVector ego = embeddings.row(0);
  const Eigen::Index dk =
      weights.heads.empty() ? 0 : weights.heads[0].value.cols();
  RowVector concat(static_cast<Eigen::Index>(weights.heads.size()) * dk);
  EgoAttentionResult result;
  for (std::size_t h = 0; h < weights.heads.size(); ++h) {
    const HeadResult head = AttentionHead(ego, embeddings, weights.heads[h]);
    concat.segment(static_cast<Eigen::Index>(h) * dk, dk) = head.output;
    result.trace.heads.emplace_back(head.weights.data(),
                                    head.weights.data() + head.weights.size());
  }
  result.ego_feature =
      Affine(concat, weights.combination, weights.combination_bias).row(0) +
      ego;
  return result;
}

}  // namespace nn
}  // namespace egoattn
