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

// Training runs on disk: one directory per (agent, seed) holding
// checkpoint.json, metrics.csv and manifest.json.

#ifndef EGOATTN_EXP_RUNNER_H_
#define EGOATTN_EXP_RUNNER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "egoattn/dqn/trainer.h"
#include "egoattn/exp/config.h"
#include "egoattn/nn/qmodel.h"

namespace egoattn {
namespace exp {

inline constexpr char kCodeVersion[] = "egoattn 1.0.0";
inline constexpr char kCheckpointFile[] = "checkpoint.json";
inline constexpr char kMetricsFile[] = "metrics.csv";
inline constexpr char kManifestFile[] = "manifest.json";

// Hex SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string GitBlobHash(const std::string& content);

// `<out>/<agent>/<seed>`.
std::filesystem::path RunDirectory(const std::filesystem::path& out,
                                   nn::ModelKind agent, std::uint64_t seed);

// Resolved config values, the run seed and the code version with its hash.
// Nothing depends on where the run is stored.
std::string ManifestJson(const ExperimentConfig& config, std::uint64_t seed);

using EpisodeCallback = std::function<void(const dqn::EpisodeMetrics&)>;

// Trains config.agent with `seed` and writes the three artifacts into `dir`,
// each atomically, the manifest last. Fails with util::IoError before
// training when `dir` is not writable; nn::NumericalError propagates.
std::vector<dqn::EpisodeMetrics> TrainRun(
    const ExperimentConfig& config, std::uint64_t seed,
    const std::filesystem::path& dir, const EpisodeCallback& on_episode = {});

struct RunSpec {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
};

// Runs every spec on up to `jobs` threads. Runs share nothing; the first
// failure is rethrown after all workers have joined.
void TrainRuns(
    const std::vector<RunSpec>& specs, int jobs,
    const std::function<void(const RunSpec&, const dqn::EpisodeMetrics&)>&
        progress = {});

// One spec per seed of config.seeds under RunDirectory(config.output_dir, ...).
std::vector<RunSpec> SeedRuns(const ExperimentConfig& config);

std::vector<dqn::EpisodeMetrics> ReadMetricsFile(
    const std::filesystem::path& path);

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_RUNNER_H_
