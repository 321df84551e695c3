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

#ifndef EGOATTN_NN_ADAM_H_
#define EGOATTN_NN_ADAM_H_

#include <cstdint>
#include <vector>

#include "egoattn/nn/tensor.h"

namespace egoattn {
namespace nn {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over every tensor of a ParameterStore.
class Adam {
 public:
  explicit Adam(const AdamConfig& config = {});

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }

  // One update from the accumulated gradients; does not clear them. Throws
  // NumericalError on a non-finite gradient, leaving the parameters as they
  // were.
  void Step(ParameterStore& params);

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace nn
}  // namespace egoattn

#endif  // EGOATTN_NN_ADAM_H_
