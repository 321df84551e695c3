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

// JSON checkpoints: a header naming the model kind, the hash of the
// experiment configuration and the format version, the architecture, and
// every parameter as {shape, values}. Doubles are written in shortest
// round-trip form, so a save/load cycle is bit-exact.

#ifndef EGOATTN_NN_CHECKPOINT_H_
#define EGOATTN_NN_CHECKPOINT_H_

#include <filesystem>
#include <stdexcept>
#include <string>

#include "egoattn/nn/qmodel.h"

namespace egoattn {
namespace nn {

inline constexpr int kCheckpointFormatVersion = 1;

// Malformed, incompatible or unreadable checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string CheckpointToJson(const QModel& model,
                             const std::string& config_hash);

// Rebuilds the model; `config_hash` (optional) receives the stored hash.
QModel CheckpointFromJson(const std::string& text,
                          std::string* config_hash = nullptr);

// Atomic: an interrupted save leaves any previous file intact.
void SaveCheckpoint(const QModel& model, const std::string& config_hash,
                    const std::filesystem::path& path);
QModel LoadCheckpoint(const std::filesystem::path& path,
                      std::string* config_hash = nullptr);

}  // namespace nn
}  // namespace egoattn

#endif  // EGOATTN_NN_CHECKPOINT_H_
