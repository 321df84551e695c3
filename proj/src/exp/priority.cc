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

#include "egoattn/exp/priority.h"

#include <cstdio>
#include <stdexcept>

#include "egoattn/nn/checkpoint.h"
#include "egoattn/sim/road.h"

namespace egoattn {
namespace exp {
namespace {

std::string Fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

}  // namespace

sim::Scene WithPriority(const sim::Scene& scene, bool ego_priority) {
  sim::Scene out = scene;
  out.priority_map = sim::PriorityMap(ego_priority);
  auto rank = [&](const sim::VehicleState& v) {
    return out.priority_map[static_cast<int>(
        sim::RoadNetwork::ArmOf(v.route.front()))];
  };
  out.ego.priority_rank = rank(out.ego);
  for (sim::VehicleState& v : out.others) v.priority_rank = rank(v);
  return out;
}

bool EgoYielded(const sim::Scene& last) {
  const sim::CenterEntry* ego = nullptr;
  for (const sim::CenterEntry& e : last.center_entries) {
    if (e.id == last.ego.id) ego = &e;
  }
  if (ego == nullptr) return false;
  for (const sim::CenterEntry& e : last.center_entries) {
    if (e.id != last.ego.id && e.time < ego->time &&
        e.time >= ego->time - kYieldWindow) {
      return true;
    }
  }
  return false;
}

std::vector<sim::Scene> FrozenScenes(const sim::EnvConfig& env,
                                     std::uint64_t seed, int count) {
  sim::EnvConfig base = env;
  base.ego_priority = false;
  std::vector<sim::Scene> scenes;
  for (int i = 0; i < count; ++i) {
    scenes.push_back(sim::Reset(dqn::EvaluationSeed(seed, i), base));
  }
  return scenes;
}

ArmEvaluation EvaluateArm(const nn::QModel& model, const sim::EnvConfig& env,
                          const std::vector<sim::Scene>& scenes) {
  if (scenes.empty()) throw std::invalid_argument("no evaluation scenes");
  int index = 0;
  int yields = 0;
  ArmEvaluation out;
  // Episode i asks for the scene of seed EvaluationSeed(0, i); the factory
  // ignores the seed and hands out the frozen scenes in order.
  out.summary = dqn::EvaluatePolicy(
      dqn::GreedyPolicy(model), env, static_cast<int>(scenes.size()), 0,
      [&](std::uint64_t) {
        return WithPriority(scenes.at(index++), env.ego_priority);
      },
      [&](int, const sim::Scene& last) { yields += EgoYielded(last) ? 1 : 0; });
  out.crossing_speed = out.summary.avg_speed.mean;
  out.yield_frequency =
      static_cast<double>(yields) / static_cast<double>(scenes.size());
  return out;
}

std::vector<RunSpec> PriorityRuns(const ExperimentConfig& config) {
  std::vector<RunSpec> runs;
  for (bool priority : {false, true}) {
    ExperimentConfig arm = config;
    arm.env.ego_priority = priority;
    const std::filesystem::path root =
        std::filesystem::path(config.output_dir) /
        (priority ? "priority_on" : "priority_off");
    for (std::uint64_t seed : config.seeds) {
      runs.push_back({arm, seed, RunDirectory(root, arm.agent, seed)});
    }
  }
  return runs;
}

PriorityReport EvaluatePriorityRuns(const ExperimentConfig& config,
                                    const std::vector<RunSpec>& runs) {
  const std::vector<sim::Scene> scenes =
      FrozenScenes(config.env, config.eval_seed, config.eval_episodes);
  PriorityReport report;
  std::vector<double> speeds[2], yields[2];
  for (const RunSpec& run : runs) {
    const nn::QModel model = nn::LoadCheckpoint(run.dir / kCheckpointFile);
    PriorityRow row;
    row.ego_priority = run.config.env.ego_priority;
    row.seed = run.seed;
    row.eval = EvaluateArm(model, run.config.env, scenes);
    speeds[row.ego_priority].push_back(row.eval.crossing_speed);
    yields[row.ego_priority].push_back(row.eval.yield_frequency);
    report.rows.push_back(std::move(row));
  }
  for (int arm = 0; arm < 2; ++arm) {
    if (speeds[arm].empty())
      throw std::invalid_argument("priority study needs both arms");
    report.speed[arm] = dqn::Summarize(speeds[arm]);
    report.yield[arm] = dqn::Summarize(yields[arm]);
  }
  return report;
}

std::string PriorityCsv(const PriorityReport& report) {
  std::string out =
      "ego_priority,seed,crossing_speed,yield_frequency,return,crash_rate\n";
  for (const PriorityRow& row : report.rows) {
    out += std::string(row.ego_priority ? "true" : "false") + "," +
           std::to_string(row.seed) + "," + Fixed(row.eval.crossing_speed) +
           "," + Fixed(row.eval.yield_frequency) + "," +
           Fixed(row.eval.summary.episode_return.mean) + "," +
           Fixed(row.eval.summary.crash_rate) + "\n";
  }
  return out;
}

}  // namespace exp
}  // namespace egoattn
