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

#ifndef EGOATTN_DQN_REPLAY_H_
#define EGOATTN_DQN_REPLAY_H_

#include <cstdint>
#include <random>
#include <vector>

#include "egoattn/obs/observation.h"

namespace egoattn {
namespace dqn {

struct Transition {
  obs::Observation obs;
  int action = 0;
  double reward = 0.0;
  obs::Observation next_obs;
  // No bootstrapping from next_obs (collision or arrival, not time-out).
  bool terminal = false;
};

// Fixed-capacity ring with strict FIFO eviction.
class ReplayBuffer {
 public:
  // Throws std::invalid_argument for capacity < 1.
  explicit ReplayBuffer(int capacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(ring_.size()); }
  std::int64_t insertions() const { return insertions_; }

  void Add(Transition t);
  // `i`-th oldest stored transition, 0 <= i < size().
  const Transition& at(int i) const;
  // `n` indices drawn uniformly with replacement.
  std::vector<int> SampleIndices(int n, std::mt19937_64& rng) const;

 private:
  int capacity_;
  std::int64_t insertions_ = 0;
  std::vector<Transition> ring_;
};

}  // namespace dqn
}  // namespace egoattn

#endif  // EGOATTN_DQN_REPLAY_H_
