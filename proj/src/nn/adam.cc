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

#include "egoattn/nn/adam.h"

#include <cmath>

namespace egoattn {
namespace nn {

Adam::Adam(const AdamConfig& config) : config_(config) {
  if (!(config.learning_rate > 0.0) ||
      !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.epsilon > 0.0)) {
    throw UsageError("invalid Adam configuration");
  }
}

void Adam::Step(ParameterStore& params) {
  const auto& names = params.names();
  for (const std::string& name : names) {
    for (double g : params.grad(name).data) {
      if (!std::isfinite(g))
        throw NumericalError("non-finite gradient in " + name);
    }
  }
  if (m_.empty()) {
    for (const std::string& name : names) {
      m_.emplace_back(params.value(name).data.size(), 0.0);
      v_.emplace_back(params.value(name).data.size(), 0.0);
    }
  }
  if (m_.size() != names.size())
    throw UsageError("Adam used with another parameter store");
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double>& w = params.value(names[k]).data;
    const std::vector<double>& g = params.grad(names[k]).data;
    std::vector<double>& m = m_[k];
    std::vector<double>& v = v_[k];
    if (m.size() != w.size())
      throw UsageError("Adam used with another parameter store");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      w[i] -= config_.learning_rate * (m[i] / c1) /
              (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace nn
}  // namespace egoattn
