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

// Experiment configuration: a text file of `key = value` lines with flat
// dotted keys. Blank lines and `#` comments are ignored; strings may be
// quoted; lists are comma separated, optionally in brackets.

#ifndef EGOATTN_EXP_CONFIG_H_
#define EGOATTN_EXP_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "egoattn/dqn/trainer.h"
#include "egoattn/nn/qmodel.h"
#include "egoattn/sim/env.h"

namespace egoattn {
namespace exp {

struct ExperimentConfig {
  sim::EnvConfig env;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  nn::ModelKind agent = nn::ModelKind::kEgoAttention;
  nn::Architecture architecture;
  dqn::TrainConfig training;  // training.seed is set per run
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1000;
  std::string output_dir = "runs";
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kSyntax, kUnknownKey, kRange };
  ConfigError(Kind kind, std::string key, const std::string& message);
  Kind kind() const { return kind_; }
  // The offending key, empty when not tied to one.
  const std::string& key() const { return key_; }

 private:
  Kind kind_;
  std::string key_;
};

ExperimentConfig ParseConfigText(const std::string& text);
ExperimentConfig ParseConfigFile(const std::filesystem::path& path);

// Sets one key from its textual value, with the same validation as parsing.
void SetConfigValue(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

// Rules that involve several keys; ParseConfigText applies them already.
// Needed after SetConfigValue overrides.
void ValidateConfig(const ExperimentConfig& config);

// Every key with its resolved value, sorted by key.
std::map<std::string, std::string> ConfigValues(const ExperimentConfig& config);

// Canonical `key = value` text; parsing it yields the same config.
std::string ConfigText(const ExperimentConfig& config);

// Hex FNV-1a hash of the canonical text without output.dir.
std::string ConfigHash(const ExperimentConfig& config);

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_CONFIG_H_
