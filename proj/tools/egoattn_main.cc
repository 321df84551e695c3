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

// Command-line front end: train, evaluate, render, compare, priority-study.
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical abort,
// 4 I/O error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "egoattn/dqn/trainer.h"
#include "egoattn/exp/compare.h"
#include "egoattn/exp/config.h"
#include "egoattn/exp/priority.h"
#include "egoattn/exp/render.h"
#include "egoattn/exp/runner.h"
#include "egoattn/nn/checkpoint.h"
#include "egoattn/nn/tensor.h"
#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> episodes;
  std::string agent;
  int jobs = 1;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags,
               const std::string& episodes_help) {
  cmd->add_option("--config", flags.config, "Config file (key = value lines)");
  cmd->add_option("--seed", flags.seed, "Seed");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--episodes", flags.episodes, episodes_help);
}

exp::ExperimentConfig LoadConfig(const CommonFlags& flags) {
  exp::ExperimentConfig config = flags.config.empty()
                                     ? exp::ExperimentConfig{}
                                     : exp::ParseConfigFile(flags.config);
  if (!flags.agent.empty())
    exp::SetConfigValue(config, "agent.kind", flags.agent);
  if (!flags.out.empty()) config.output_dir = flags.out;
  return config;
}

void PrintSummary(const std::string& label, const dqn::EvalSummary& s) {
  std::printf(
      "%s: episodes %d  return %.3f +- %.3f  length %.2f  speed %.2f  crash "
      "%.3f\n",
      label.c_str(), s.episodes, s.episode_return.mean,
      s.episode_return.half_width, s.length.mean, s.avg_speed.mean,
      s.crash_rate);
}

void PrintFinal(const exp::RunSpec& run,
                const std::vector<dqn::EpisodeMetrics>& metrics) {
  const std::size_t n = std::min<std::size_t>(100, metrics.size());
  double ret = 0, len = 0, speed = 0;
  for (std::size_t i = metrics.size() - n; i < metrics.size(); ++i) {
    ret += metrics[i].return_;
    len += metrics[i].length;
    speed += metrics[i].avg_speed;
  }
  std::printf("%s: last %zu episodes  return %.3f  length %.2f  speed %.2f\n",
              run.dir.string().c_str(), n, ret / n, len / n, speed / n);
}

void Progress(const exp::RunSpec& run, const dqn::EpisodeMetrics& m) {
  if ((m.episode + 1) % 100 == 0) {
    std::fprintf(stderr, "%s: episode %d  return %.0f  epsilon %.3f\n",
                 run.dir.string().c_str(), m.episode + 1, m.return_, m.epsilon);
  }
}

void TrainAndReport(const std::vector<exp::RunSpec>& runs, int jobs) {
  exp::TrainRuns(runs, jobs, Progress);
  for (const exp::RunSpec& run : runs) {
    PrintFinal(run, exp::ReadMetricsFile(run.dir / exp::kMetricsFile));
  }
}

int Train(const CommonFlags& flags) {
  exp::ExperimentConfig config = LoadConfig(flags);
  if (flags.episodes)
    exp::SetConfigValue(config, "training.episodes",
                        std::to_string(*flags.episodes));
  if (flags.seed) config.seeds = {*flags.seed};
  exp::ValidateConfig(config);
  TrainAndReport(exp::SeedRuns(config), flags.jobs);
  return 0;
}

int Evaluate(const CommonFlags& flags, const std::string& checkpoint) {
  exp::ExperimentConfig config = LoadConfig(flags);
  if (flags.episodes) {
    exp::SetConfigValue(config, "evaluation.episodes",
                        std::to_string(*flags.episodes));
  }
  if (flags.seed) config.eval_seed = *flags.seed;
  exp::ValidateConfig(config);
  const nn::QModel model = nn::LoadCheckpoint(checkpoint);
  const dqn::EvalSummary s =
      dqn::Evaluate(model, config.env, config.eval_episodes, config.eval_seed);
  PrintSummary(nn::ModelKindName(model.kind()), s);
  if (!flags.out.empty()) {
    nlohmann::ordered_json j;
    j["checkpoint"] = checkpoint;
    j["model_kind"] = nn::ModelKindName(model.kind());
    j["seed"] = config.eval_seed;
    j["episodes"] = s.episodes;
    j["return_mean"] = s.episode_return.mean;
    j["return_ci"] = s.episode_return.half_width;
    j["length_mean"] = s.length.mean;
    j["avg_speed_mean"] = s.avg_speed.mean;
    j["crash_rate"] = s.crash_rate;
    j["returns"] = nlohmann::ordered_json::array();
    for (const dqn::EpisodeMetrics& m : s.per_episode)
      j["returns"].push_back(m.return_);
    util::WriteFileAtomic(std::filesystem::path(flags.out) / "evaluation.json",
                          j.dump(2) + "\n");
  }
  return 0;
}

int Render(const CommonFlags& flags, const std::string& checkpoint) {
  exp::ExperimentConfig config = LoadConfig(flags);
  const nn::QModel model = nn::LoadCheckpoint(checkpoint);
  if (model.kind() != nn::ModelKind::kEgoAttention) {
    std::fprintf(stderr,
                 "warning: %s has no attention; rendering the scene only\n",
                 nn::ModelKindName(model.kind()).c_str());
  }
  const std::uint64_t seed = flags.seed.value_or(config.eval_seed);
  const std::filesystem::path dir =
      flags.out.empty() ? std::filesystem::path(config.output_dir) / "render"
                        : std::filesystem::path(flags.out);
  const auto paths =
      exp::WriteFrames(exp::RecordEpisode(model, config.env, seed), dir);
  std::printf("wrote %zu frames to %s\n", paths.size(), dir.string().c_str());
  return 0;
}

int Compare(const CommonFlags& flags, const std::vector<std::string>& dirs) {
  std::vector<std::filesystem::path> roots(dirs.begin(), dirs.end());
  const exp::Comparison c = exp::Compare(exp::FindRuns(roots));
  for (const std::string& w : c.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  const std::filesystem::path out =
      flags.out.empty() ? "compare" : std::filesystem::path(flags.out);
  exp::WriteComparison(c, out);
  std::printf("last %d episodes (mean +- 95%% CI across seeds)\n",
              std::min(c.final_window, c.episodes));
  for (const exp::AgentCurves& a : c.agents) {
    std::printf(
        "  %-14s seeds %d  return %.3f +- %.3f  length %.2f +- %.2f  speed "
        "%.2f +- %.2f\n",
        a.agent.c_str(), a.seeds, a.final[0].mean, a.final[0].half_width,
        a.final[1].mean, a.final[1].half_width, a.final[2].mean,
        a.final[2].half_width);
  }
  std::printf("report written to %s\n", out.string().c_str());
  return 0;
}

int PriorityStudy(const CommonFlags& flags) {
  exp::ExperimentConfig config = LoadConfig(flags);
  if (flags.episodes)
    exp::SetConfigValue(config, "training.episodes",
                        std::to_string(*flags.episodes));
  if (flags.seed) config.seeds = {*flags.seed};
  exp::ValidateConfig(config);
  const std::vector<exp::RunSpec> runs = exp::PriorityRuns(config);
  TrainAndReport(runs, flags.jobs);
  const exp::PriorityReport report = exp::EvaluatePriorityRuns(config, runs);
  const std::filesystem::path csv =
      std::filesystem::path(config.output_dir) / "priority_study.csv";
  util::WriteFileAtomic(csv, exp::PriorityCsv(report));
  for (int arm = 0; arm < 2; ++arm) {
    std::printf(
        "%-12s crossing speed %.3f +- %.3f  yield frequency %.3f +- %.3f\n",
        arm ? "priority" : "no priority", report.speed[arm].mean,
        report.speed[arm].half_width, report.yield[arm].mean,
        report.yield[arm].half_width);
  }
  std::printf("report written to %s\n", csv.string().c_str());
  return 0;
}

int Run(int argc, char** argv) {
  CLI::App app{
      "Ego-attention DQN agents for unsignalized intersection crossing"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string checkpoint;
  std::vector<std::string> dirs;

  CLI::App* train = app.add_subcommand("train", "Train one agent per seed");
  AddCommon(train, flags, "Override training.episodes");
  train->add_option("--agent", flags.agent, "Override agent.kind");
  train->add_option("--jobs", flags.jobs, "Parallel runs")
      ->check(CLI::PositiveNumber);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Greedy evaluation of a checkpoint");
  AddCommon(evaluate, flags, "Override evaluation.episodes");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint.json")
      ->required();

  CLI::App* render =
      app.add_subcommand("render", "SVG frames of one greedy episode");
  AddCommon(render, flags, "Unused");
  render->add_option("--checkpoint", checkpoint, "checkpoint.json")->required();

  CLI::App* compare =
      app.add_subcommand("compare", "Learning curves across runs");
  AddCommon(compare, flags, "Unused");
  compare->add_option("runs", dirs, "Run directories or roots to search")
      ->required();

  CLI::App* priority = app.add_subcommand(
      "priority-study", "Train and compare both priority arms");
  AddCommon(priority, flags, "Override training.episodes");
  priority->add_option("--agent", flags.agent, "Override agent.kind");
  priority->add_option("--jobs", flags.jobs, "Parallel runs")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (train->parsed()) return Train(flags);
    if (evaluate->parsed()) return Evaluate(flags, checkpoint);
    if (render->parsed()) return Render(flags, checkpoint);
    if (compare->parsed()) return Compare(flags, dirs);
    if (priority->parsed()) return PriorityStudy(flags);
  } catch (const exp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const nn::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const util::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const nn::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace egoattn

int main(int argc, char** argv) { return egoattn::Run(argc, argv); }
