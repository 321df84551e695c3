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

#include "egoattn/exp/runner.h"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "egoattn/dqn/trainer.h"
#include "egoattn/nn/checkpoint.h"
#include "egoattn/util/atomic_file.h"
#include "gtest/gtest.h"

namespace egoattn {
namespace exp {
namespace {

namespace fs = std::filesystem;

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("egoattn_runner_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig SmallConfig(nn::ModelKind agent) {
  ExperimentConfig config;
  config.agent = agent;
  config.training.episodes = 4;
  config.training.batch_size = 4;
  config.training.replay_capacity = 100;
  config.training.target_sync = 5;
  return config;
}

std::set<std::string> Listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    names.insert(entry.path().filename().string());
  }
  return names;
}

TEST(GitBlobHashTest, MatchesGit) {
  // `git hash-object` of an empty file and of "hello\n".
  EXPECT_EQ(GitBlobHash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(GitBlobHash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(RunnerTest, RunDirectoryLayout) {
  EXPECT_EQ(RunDirectory("out", nn::ModelKind::kCnn, 7),
            fs::path("out/cnn_grid/7"));
}

TEST(RunnerTest, ManifestHoldsConfigSeedAndCodeHash) {
  ExperimentConfig config = SmallConfig(nn::ModelKind::kFcn);
  const nlohmann::json manifest =
      nlohmann::json::parse(ManifestJson(config, 3));
  EXPECT_EQ(manifest.at("seed"), 3);
  EXPECT_EQ(manifest.at("code_version"), kCodeVersion);
  EXPECT_EQ(manifest.at("code_hash"), GitBlobHash(kCodeVersion));
  const auto values = ConfigValues(config);
  ASSERT_EQ(manifest.at("config").size(), values.size());
  for (const auto& [key, value] : values)
    EXPECT_EQ(manifest["config"][key], value) << key;
}

TEST(RunnerTest, TrainWritesExactlyTheThreeArtifacts) {
  const fs::path dir = FreshDir("artifacts");
  const ExperimentConfig config = SmallConfig(nn::ModelKind::kEgoAttention);
  const auto metrics = TrainRun(config, 5, dir);
  EXPECT_EQ(Listing(dir), (std::set<std::string>{kCheckpointFile, kMetricsFile,
                                                 kManifestFile}));
  ASSERT_EQ(metrics.size(), 4u);
  const auto read = ReadMetricsFile(dir / kMetricsFile);
  ASSERT_EQ(read.size(), metrics.size());
  for (std::size_t i = 0; i < read.size(); ++i) {
    EXPECT_EQ(read[i].return_, metrics[i].return_);
    EXPECT_EQ(read[i].mean_loss, metrics[i].mean_loss);
  }
  std::string hash;
  nn::LoadCheckpoint(dir / kCheckpointFile, &hash);
  EXPECT_EQ(hash, ConfigHash(config));
}

TEST(RunnerTest, ReloadedCheckpointActsLikeTheTrainedModel) {
  const fs::path dir = FreshDir("reload");
  for (nn::ModelKind kind : {nn::ModelKind::kFcn, nn::ModelKind::kCnn,
                             nn::ModelKind::kEgoAttention}) {
    const ExperimentConfig config = SmallConfig(kind);
    const fs::path run = RunDirectory(dir, kind, 1);
    TrainRun(config, 1, run);
    dqn::TrainConfig training = config.training;
    training.seed = 1;
    const dqn::TrainingResult direct =
        dqn::RunTraining(config.env, kind, training, config.architecture);
    const nn::QModel loaded = nn::LoadCheckpoint(run / kCheckpointFile);

    std::vector<int> direct_actions, loaded_actions;
    const dqn::Policy direct_policy = dqn::GreedyPolicy(direct.model);
    const dqn::Policy loaded_policy = dqn::GreedyPolicy(loaded);
    dqn::EvaluatePolicy(
        [&](const sim::Scene& s) {
          const int a = loaded_policy(s);
          loaded_actions.push_back(a);
          direct_actions.push_back(direct_policy(s));
          return a;
        },
        config.env, 10, 77);
    EXPECT_EQ(loaded_actions, direct_actions) << nn::ModelKindName(kind);
  }
}

TEST(RunnerTest, SeedsGetDisjointDirectoriesAndThreadsChangeNothing) {
  const fs::path dir = FreshDir("seeds");
  ExperimentConfig config = SmallConfig(nn::ModelKind::kFcn);
  config.seeds = {0, 1};
  config.output_dir = (dir / "parallel").string();
  const auto parallel = SeedRuns(config);
  ASSERT_EQ(parallel.size(), 2u);
  EXPECT_NE(parallel[0].dir, parallel[1].dir);
  TrainRuns(parallel, 2);
  config.output_dir = (dir / "serial").string();
  const auto serial = SeedRuns(config);
  TrainRuns(serial, 1);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(Listing(parallel[i].dir).size(), 3u);
    EXPECT_EQ(util::ReadFile(parallel[i].dir / kMetricsFile),
              util::ReadFile(serial[i].dir / kMetricsFile));
  }
  EXPECT_NE(util::ReadFile(parallel[0].dir / kMetricsFile),
            util::ReadFile(parallel[1].dir / kMetricsFile));
}

TEST(RunnerTest, UnwritableDirectoryFailsBeforeTraining) {
  const fs::path dir = FreshDir("unwritable");
  util::WriteFileAtomic(dir / "file", "x");
  ExperimentConfig config = SmallConfig(nn::ModelKind::kFcn);
  config.training.episodes = 100000;  // would take hours if it started
  EXPECT_THROW(TrainRun(config, 0, dir / "file" / "run"), util::IoError);
}

TEST(RunnerTest, NumericalAbortLeavesNoArtifacts) {
  const fs::path dir = FreshDir("nan");
  ExperimentConfig config = SmallConfig(nn::ModelKind::kFcn);
  config.training.learning_rate = 1e300;
  config.training.episodes = 20;
  EXPECT_THROW(TrainRun(config, 0, dir), nn::NumericalError);
  EXPECT_TRUE(Listing(dir).empty());
}

TEST(RunnerTest, FirstFailureIsRethrownAfterJoin) {
  const fs::path dir = FreshDir("failure");
  util::WriteFileAtomic(dir / "file", "x");
  ExperimentConfig config = SmallConfig(nn::ModelKind::kFcn);
  std::vector<RunSpec> specs = {{config, 0, dir / "ok"},
                                {config, 1, dir / "file" / "bad"}};
  EXPECT_THROW(TrainRuns(specs, 2), util::IoError);
  EXPECT_THROW(TrainRuns(specs, 0), std::invalid_argument);
}

}  // namespace
}  // namespace exp
}  // namespace egoattn
