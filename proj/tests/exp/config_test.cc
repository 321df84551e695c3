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

#include "egoattn/exp/config.h"

#include <filesystem>
#include <string>

#include "gtest/gtest.h"

namespace egoattn {
namespace exp {
namespace {

using Kind = ConfigError::Kind;

// Runs `fn`, expecting a ConfigError; returns it.
template <typename Fn>
ConfigError Catch(Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError";
  return ConfigError(Kind::kSyntax, "", "none");
}

TEST(ConfigTest, EmptyTextGivesDefaults) {
  const ExperimentConfig config = ParseConfigText("");
  const ExperimentConfig defaults;
  EXPECT_EQ(ConfigText(config), ConfigText(defaults));
  EXPECT_EQ(config.agent, nn::ModelKind::kEgoAttention);
  EXPECT_EQ(config.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(config.env.min_vehicles, 3);
  EXPECT_EQ(config.env.max_vehicles, 12);
  EXPECT_FALSE(config.env.ego_priority);
  EXPECT_DOUBLE_EQ(config.training.gamma, 0.95);
  EXPECT_DOUBLE_EQ(config.training.learning_rate, 5e-4);
  EXPECT_EQ(config.training.batch_size, 64);
  EXPECT_EQ(config.training.replay_capacity, 15000);
  EXPECT_EQ(config.training.target_sync, 50);
  EXPECT_EQ(config.training.episodes, 1000);
  EXPECT_EQ(config.output_dir, "runs");
}

TEST(ConfigTest, CommentsAndBlankLinesIgnored) {
  const ExperimentConfig config = ParseConfigText("# header\n\n  # indented\n");
  EXPECT_EQ(ConfigText(config), ConfigText(ExperimentConfig{}));
}

TEST(ConfigTest, SettingKindKeepsOtherDefaults) {
  const ExperimentConfig config =
      ParseConfigText("agent.kind = \"cnn_grid\"\n");
  EXPECT_EQ(config.agent, nn::ModelKind::kCnn);
  ExperimentConfig expected;
  expected.agent = nn::ModelKind::kCnn;
  EXPECT_EQ(ConfigText(config), ConfigText(expected));

  const ExperimentConfig ego =
      ParseConfigText("agent.kind = \"ego_attention\"  # default\n");
  EXPECT_EQ(ConfigText(ego), ConfigText(ExperimentConfig{}));
}

TEST(ConfigTest, ValuesOfEveryType) {
  const ExperimentConfig config = ParseConfigText(
      "env.seeds = [4, 5]\n"
      "env.ego_priority = true\n"
      "env.ego_destination = right\n"
      "agent.encoder = 32, 32\n"
      "agent.key_size = 16\n"
      "training.gamma = 0.9\n"
      "training.episodes = 20\n"
      "output.dir = \"out dir\"\n");
  EXPECT_EQ(config.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_TRUE(config.env.ego_priority);
  EXPECT_EQ(config.env.ego_turn, sim::Turn::kRight);
  EXPECT_EQ(config.architecture.encoder, (std::vector<int>{32, 32}));
  EXPECT_EQ(config.architecture.key_size, 16);
  EXPECT_DOUBLE_EQ(config.training.gamma, 0.9);
  EXPECT_EQ(config.training.episodes, 20);
  EXPECT_EQ(config.output_dir, "out dir");
}

TEST(ConfigTest, CanonicalTextRoundTrips) {
  ExperimentConfig config;
  config.agent = nn::ModelKind::kFcn;
  config.seeds = {7};
  config.training.gamma = 0.1 + 0.2;
  config.env.ego_priority = true;
  const ExperimentConfig parsed = ParseConfigText(ConfigText(config));
  EXPECT_EQ(ConfigText(parsed), ConfigText(config));
  EXPECT_EQ(parsed.training.gamma, config.training.gamma);
  EXPECT_EQ(ConfigHash(parsed), ConfigHash(config));
}

TEST(ConfigTest, HashIgnoresOutputDirOnly) {
  ExperimentConfig a;
  ExperimentConfig b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.env.ego_priority = true;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
}

TEST(ConfigTest, OutOfRangeNamesTheKey) {
  const ConfigError e =
      Catch([] { ParseConfigText("training.gamma = 1.5\n"); });
  EXPECT_EQ(e.kind(), Kind::kRange);
  EXPECT_EQ(e.key(), "training.gamma");
  EXPECT_NE(std::string(e.what()).find("training.gamma"), std::string::npos);
}

TEST(ConfigTest, OtherRangeErrors) {
  for (const char* text :
       {"env.seeds = []\n", "agent.kind = \"transformer\"\n",
        "training.batch_size = 0\n", "env.ego_destination = up\n",
        "training.epsilon_start = -0.1\n"}) {
    const ConfigError e = Catch([&] { ParseConfigText(text); });
    EXPECT_EQ(e.kind(), Kind::kRange) << text;
    EXPECT_FALSE(e.key().empty()) << text;
  }
}

TEST(ConfigTest, CrossFieldRules) {
  const ConfigError e = Catch(
      [] { ParseConfigText("env.min_vehicles = 5\nenv.max_vehicles = 4\n"); });
  EXPECT_EQ(e.kind(), Kind::kRange);
  EXPECT_EQ(e.key(), "env.max_vehicles");
  const ConfigError f = Catch([] { ParseConfigText("agent.heads = 3\n"); });
  EXPECT_EQ(f.kind(), Kind::kRange);
}

TEST(ConfigTest, UnknownKey) {
  const ConfigError e = Catch([] { ParseConfigText("training.gama = 0.9\n"); });
  EXPECT_EQ(e.kind(), Kind::kUnknownKey);
  EXPECT_EQ(e.key(), "training.gama");
}

TEST(ConfigTest, SyntaxErrors) {
  EXPECT_EQ(Catch([] { ParseConfigText("training.gamma 0.9\n"); }).kind(),
            Kind::kSyntax);
  EXPECT_EQ(Catch([] { ParseConfigText("= 3\n"); }).kind(), Kind::kSyntax);
  EXPECT_EQ(Catch([] { ParseConfigText("training.gamma = abc\n"); }).kind(),
            Kind::kSyntax);
  EXPECT_EQ(Catch([] { ParseConfigText("env.seeds = [1, 2\n"); }).kind(),
            Kind::kSyntax);
  EXPECT_EQ(Catch([] { ParseConfigText("output.dir = \"x\n"); }).kind(),
            Kind::kSyntax);
  const ConfigError dup = Catch(
      [] { ParseConfigText("training.gamma = 0.9\ntraining.gamma = 0.8\n"); });
  EXPECT_EQ(dup.kind(), Kind::kSyntax);
  EXPECT_EQ(dup.key(), "training.gamma");
}

TEST(ConfigTest, MissingFile) {
  const ConfigError e = Catch([] {
    ParseConfigFile(std::filesystem::temp_directory_path() / "no_such.cfg");
  });
  EXPECT_EQ(e.kind(), Kind::kMissingFile);
}

TEST(ConfigTest, SetConfigValueValidates) {
  ExperimentConfig config;
  SetConfigValue(config, "training.episodes", "5");
  EXPECT_EQ(config.training.episodes, 5);
  EXPECT_EQ(
      Catch([&] { SetConfigValue(config, "training.episodes", "-1"); }).kind(),
      Kind::kRange);
  EXPECT_EQ(Catch([&] { SetConfigValue(config, "nope", "1"); }).kind(),
            Kind::kUnknownKey);
}

}  // namespace
}  // namespace exp
}  // namespace egoattn
