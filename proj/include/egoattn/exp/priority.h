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

// Priority study: agents trained with and without right of way for the ego,
// evaluated on one frozen set of initial scenes.

#ifndef EGOATTN_EXP_PRIORITY_H_
#define EGOATTN_EXP_PRIORITY_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egoattn/dqn/trainer.h"
#include "egoattn/exp/config.h"
#include "egoattn/exp/runner.h"
#include "egoattn/nn/qmodel.h"
#include "egoattn/sim/env.h"

namespace egoattn {
namespace exp {

// Another vehicle counts as conflicting when it entered the center at most
// this long before the ego did.
inline constexpr double kYieldWindow = 3.0;

// `scene` with priority ranks reassigned for `ego_priority`; nothing else
// changes.
sim::Scene WithPriority(const sim::Scene& scene, bool ego_priority);

// True when the ego reached the center and another vehicle got there first,
// within kYieldWindow seconds before it.
bool EgoYielded(const sim::Scene& last);

// Initial scenes for evaluation episode i: sim::Reset(EvaluationSeed(seed,
// i), env) without ego priority. The arms apply their own priority on top.
std::vector<sim::Scene> FrozenScenes(const sim::EnvConfig& env,
                                     std::uint64_t seed, int count);

struct ArmEvaluation {
  dqn::EvalSummary summary;
  double crossing_speed = 0.0;   // mean over episodes of the mean ego speed
  double yield_frequency = 0.0;  // fraction of episodes where EgoYielded
};

ArmEvaluation EvaluateArm(const nn::QModel& model, const sim::EnvConfig& env,
                          const std::vector<sim::Scene>& scenes);

// The two arms: config with env.ego_priority false, then true, stored under
// `<output.dir>/priority_off` and `<output.dir>/priority_on`.
std::vector<RunSpec> PriorityRuns(const ExperimentConfig& config);

struct PriorityRow {
  bool ego_priority = false;
  std::uint64_t seed = 0;
  ArmEvaluation eval;
};

struct PriorityReport {
  std::vector<PriorityRow> rows;  // arm-major, seeds in config order
  dqn::MeanCi speed[2];           // index: ego_priority
  dqn::MeanCi yield[2];
};

// Evaluates the trained runs (their checkpoints must exist) on
// config.eval_episodes frozen scenes from config.eval_seed.
PriorityReport EvaluatePriorityRuns(const ExperimentConfig& config,
                                    const std::vector<RunSpec>& runs);

// `ego_priority,seed,crossing_speed,yield_frequency,return,crash_rate`.
std::string PriorityCsv(const PriorityReport& report);

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_PRIORITY_H_
