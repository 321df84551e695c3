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

// Deep Q-learning shared by the three agents: epsilon-greedy acting, replay,
// a periodically synced target network and smooth-L1 TD regression.

#ifndef EGOATTN_DQN_TRAINER_H_
#define EGOATTN_DQN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "egoattn/dqn/replay.h"
#include "egoattn/nn/adam.h"
#include "egoattn/nn/qmodel.h"
#include "egoattn/sim/env.h"

namespace egoattn {
namespace dqn {

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 10000;  // decisions
};

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int batch_size = 64;
  int replay_capacity = 15000;
  int target_sync = 50;  // gradient steps
  EpsilonSchedule epsilon;
  int episodes = 1000;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
};

// Linear from start to end over decay_steps, constant afterwards.
double Epsilon(std::int64_t step, const EpsilonSchedule& schedule);

// The observation each agent sees: padded list, grid, or variable list.
obs::Observation Observe(nn::ModelKind kind, const sim::Scene& scene);

// Index of the largest value, lowest index on exact ties.
int Argmax(const std::array<double, nn::kNumOutputs>& q);

// Uniform action with probability eps, otherwise the greedy one.
int SelectAction(const nn::QModel& model, const obs::Observation& observation,
                 double eps, std::mt19937_64& rng);

// reward for terminal transitions (next_obs is never read), else
// reward + gamma * max_a' Q_target(next_obs, a').
std::vector<double> TdTargets(const std::vector<const Transition*>& batch,
                              const nn::QModel& target, double gamma);

// Online network, target network, optimizer and step counter.
struct Learner {
  Learner(nn::ModelKind kind, const TrainConfig& config,
          const nn::Architecture& arch = {});

  nn::QModel model;
  nn::QModel target;
  nn::Adam optimizer;
  std::int64_t gradient_steps = 0;
};

// One gradient step on a uniform minibatch. Returns the batch loss, or
// nullopt (and does nothing) while the buffer holds fewer than batch_size
// transitions. Syncs the target every target_sync steps. Throws
// nn::NumericalError on a non-finite loss.
std::optional<double> TrainStep(Learner& learner, const ReplayBuffer& buffer,
                                const TrainConfig& config,
                                std::mt19937_64& rng);

struct EpisodeMetrics {
  int episode = 0;
  double return_ = 0.0;
  int length = 0;
  double avg_speed = 0.0;  // ego speed after each decision, averaged
  double epsilon = 0.0;    // at the last decision
  double mean_loss = 0.0;  // 0 when no gradient step happened
  bool crashed = false;
  bool arrived = false;
};

struct TrainingResult {
  nn::QModel model;
  std::vector<EpisodeMetrics> metrics;
};

// Fully determined by the configs and train.seed. `on_episode`, when set,
// sees each episode as it finishes.
TrainingResult RunTraining(
    const sim::EnvConfig& env, nn::ModelKind kind, const TrainConfig& config,
    const nn::Architecture& arch = {},
    const std::function<void(const EpisodeMetrics&)>& on_episode = {});

// Header `episode,return,length,avg_speed,epsilon,mean_loss`, one row per
// episode, doubles in shortest round-trip form.
void WriteMetricsCsv(std::ostream& out,
                     const std::vector<EpisodeMetrics>& metrics);
// Throws std::runtime_error on a malformed file.
std::vector<EpisodeMetrics> ReadMetricsCsv(std::istream& in);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal approximation; 0 for one sample
};

MeanCi Summarize(const std::vector<double>& samples);

struct EvalSummary {
  int episodes = 0;
  MeanCi episode_return;
  MeanCi length;
  MeanCi avg_speed;
  double crash_rate = 0.0;
  std::vector<EpisodeMetrics> per_episode;
};

using Policy = std::function<int(const sim::Scene&)>;

// Greedy policy of a model.
Policy GreedyPolicy(const nn::QModel& model);

// Initial scene for an evaluation episode, from its scene seed.
using SceneFactory = std::function<sim::Scene(std::uint64_t scene_seed)>;

// Episode i starts from the scene with seed EvaluationSeed(seed, i).
std::uint64_t EvaluationSeed(std::uint64_t seed, int episode);

// Sees the terminal scene of each evaluation episode.
using EpisodeEnd = std::function<void(int episode, const sim::Scene& last)>;

// Runs `policy` on `episodes` fresh scenes, by default sim::Reset. Throws
// std::invalid_argument for episodes < 1.
EvalSummary EvaluatePolicy(const Policy& policy, const sim::EnvConfig& env,
                           int episodes, std::uint64_t seed,
                           const SceneFactory& scenes = {},
                           const EpisodeEnd& on_end = {});
EvalSummary Evaluate(const nn::QModel& model, const sim::EnvConfig& env,
                     int episodes, std::uint64_t seed);

}  // namespace dqn
}  // namespace egoattn

#endif  // EGOATTN_DQN_TRAINER_H_
