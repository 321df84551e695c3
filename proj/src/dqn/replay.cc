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

#include "egoattn/dqn/replay.h"

#include <stdexcept>

namespace egoattn {
namespace dqn {

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1)
    throw std::invalid_argument("replay capacity must be positive");
  ring_.reserve(static_cast<std::size_t>(capacity));
}

void ReplayBuffer::Add(Transition t) {
  if (size() < capacity_) {
    ring_.push_back(std::move(t));
  } else {
    ring_[insertions_ % capacity_] = std::move(t);
  }
  ++insertions_;
}

const Transition& ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size())
    throw std::out_of_range("replay index out of range");
  const std::int64_t oldest = size() < capacity_ ? 0 : insertions_ % capacity_;
  return ring_[(oldest + i) % capacity_];
}

std::vector<int> ReplayBuffer::SampleIndices(int n,
                                             std::mt19937_64& rng) const {
  if (size() == 0)
    throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<int> pick(0, size() - 1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int& i : out) i = pick(rng);
  return out;
}

}  // namespace dqn
}  // namespace egoattn
