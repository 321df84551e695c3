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

#include "egoattn/dqn/trainer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace egoattn {
namespace dqn {
namespace {

// splitmix64: decorrelated child seeds for the independent random streams.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t {
  kInitStream = 0,
  kActionStream = 1,
  kSampleStream = 2,
  kEpisodeStream = 3,
  kEvaluationStream = 4,
};

std::string FormatDouble(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

double SmoothL1(double d) {
  return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
}

double SmoothL1Grad(double d) { return std::clamp(d, -1.0, 1.0); }

}  // namespace

void TrainConfig::Validate() const {
  const auto require = [](bool ok, const char* field) {
    if (!ok)
      throw std::invalid_argument(std::string("invalid training.") + field);
  };
  require(gamma >= 0.0 && gamma < 1.0, "gamma");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2");
  require(batch_size > 0, "batch_size");
  require(replay_capacity >= batch_size, "replay_capacity");
  require(target_sync > 0, "target_sync");
  require(epsilon.start >= 0.0 && epsilon.start <= 1.0, "epsilon_start");
  require(epsilon.end >= 0.0 && epsilon.end <= 1.0, "epsilon_end");
  require(epsilon.decay_steps > 0, "epsilon_decay_steps");
  require(episodes >= 0, "episodes");
}

double Epsilon(std::int64_t step, const EpsilonSchedule& schedule) {
  if (step >= schedule.decay_steps) return schedule.end;
  const double f = static_cast<double>(std::max<std::int64_t>(step, 0)) /
                   static_cast<double>(schedule.decay_steps);
  return schedule.start + f * (schedule.end - schedule.start);
}

obs::Observation Observe(nn::ModelKind kind, const sim::Scene& scene) {
  switch (kind) {
    case nn::ModelKind::kFcn:
      return obs::MakeListObservation(scene, true);
    case nn::ModelKind::kCnn:
      return obs::MakeGridObservation(scene);
    case nn::ModelKind::kEgoAttention:
      return obs::MakeListObservation(scene, false);
  }
  return {};
}

int Argmax(const std::array<double, nn::kNumOutputs>& q) {
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int SelectAction(const nn::QModel& model, const obs::Observation& observation,
                 double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < eps) {
    std::uniform_int_distribution<int> uniform(0, nn::kNumOutputs - 1);
    return uniform(rng);
  }
  return Argmax(model.QValues(observation).values);
}

std::vector<double> TdTargets(const std::vector<const Transition*>& batch,
                              const nn::QModel& target, double gamma) {
  if (batch.empty())
    throw std::invalid_argument("td targets of an empty batch");
  std::vector<double> y(batch.size());
  std::vector<const obs::Observation*> next;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i]->reward;
    if (!batch[i]->terminal) {
      next.push_back(&batch[i]->next_obs);
      where.push_back(i);
    }
  }
  if (next.empty()) return y;
  const nn::Matrix q = target.Forward(nn::MakeBatch(target.kind(), next));
  for (std::size_t k = 0; k < where.size(); ++k)
    y[where[k]] += gamma * q.row(k).maxCoeff();
  return y;
}

Learner::Learner(nn::ModelKind kind, const TrainConfig& config,
                 const nn::Architecture& arch)
    : model(kind, DeriveSeed(config.seed, kInitStream), arch),
      target(model),
      optimizer({config.learning_rate, config.adam_beta1, config.adam_beta2}) {}

std::optional<double> TrainStep(Learner& learner, const ReplayBuffer& buffer,
                                const TrainConfig& config,
                                std::mt19937_64& rng) {
  if (buffer.size() < config.batch_size) return std::nullopt;
  std::vector<const Transition*> batch;
  std::vector<const obs::Observation*> inputs;
  for (int i : buffer.SampleIndices(config.batch_size, rng)) {
    batch.push_back(&buffer.at(i));
    inputs.push_back(&batch.back()->obs);
  }
  const std::vector<double> y = TdTargets(batch, learner.target, config.gamma);

  nn::Tape tape;
  const nn::Matrix q =
      learner.model.Forward(nn::MakeBatch(learner.model.kind(), inputs), &tape);
  const double n = static_cast<double>(batch.size());
  nn::Matrix grad = nn::Matrix::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double d = q(b, batch[b]->action) - y[b];
    loss += SmoothL1(d) / n;
    grad(b, batch[b]->action) = SmoothL1Grad(d) / n;
  }
  if (!std::isfinite(loss)) {
    throw nn::NumericalError("non-finite loss at gradient step " +
                             std::to_string(learner.gradient_steps));
  }
  learner.model.params().ZeroGrad();
  learner.model.Backward(tape, grad);
  learner.optimizer.Step(learner.model.params());
  ++learner.gradient_steps;
  if (learner.gradient_steps % config.target_sync == 0) {
    learner.target.params().CopyValuesFrom(learner.model.params());
  }
  return loss;
}

TrainingResult RunTraining(
    const sim::EnvConfig& env, nn::ModelKind kind, const TrainConfig& config,
    const nn::Architecture& arch,
    const std::function<void(const EpisodeMetrics&)>& on_episode) {
  env.Validate();
  config.Validate();
  Learner learner(kind, config, arch);
  ReplayBuffer buffer(config.replay_capacity);
  std::mt19937_64 action_rng(DeriveSeed(config.seed, kActionStream));
  std::mt19937_64 sample_rng(DeriveSeed(config.seed, kSampleStream));
  std::int64_t decisions = 0;
  std::vector<EpisodeMetrics> metrics;

  for (int episode = 0; episode < config.episodes; ++episode) {
    sim::Scene scene =
        sim::Reset(DeriveSeed(DeriveSeed(config.seed, kEpisodeStream),
                              static_cast<std::uint64_t>(episode)),
                   env);
    obs::Observation observation = Observe(kind, scene);
    EpisodeMetrics m;
    m.episode = episode;
    double speed_sum = 0.0;
    double loss_sum = 0.0;
    int losses = 0;
    while (!scene.terminal) {
      m.epsilon = Epsilon(decisions, config.epsilon);
      const int action =
          SelectAction(learner.model, observation, m.epsilon, action_rng);
      sim::StepOutcome out =
          sim::Step(scene, static_cast<sim::EgoAction>(action), env);
      obs::Observation next = Observe(kind, out.next_scene);
      buffer.Add(
          {observation, action, out.reward, next, out.crashed || out.arrived});
      ++decisions;
      m.return_ += out.reward;
      ++m.length;
      speed_sum += out.next_scene.ego.v;
      m.crashed = out.crashed;
      m.arrived = out.arrived;
      if (const auto loss = TrainStep(learner, buffer, config, sample_rng)) {
        loss_sum += *loss;
        ++losses;
      }
      scene = std::move(out.next_scene);
      observation = std::move(next);
    }
    m.avg_speed = m.length > 0 ? speed_sum / m.length : 0.0;
    m.mean_loss = losses > 0 ? loss_sum / losses : 0.0;
    metrics.push_back(m);
    if (on_episode) on_episode(m);
  }
  return {std::move(learner.model), std::move(metrics)};
}

void WriteMetricsCsv(std::ostream& out,
                     const std::vector<EpisodeMetrics>& metrics) {
  out << "episode,return,length,avg_speed,epsilon,mean_loss\n";
  for (const EpisodeMetrics& m : metrics) {
    out << m.episode << ',' << FormatDouble(m.return_) << ',' << m.length << ','
        << FormatDouble(m.avg_speed) << ',' << FormatDouble(m.epsilon) << ','
        << FormatDouble(m.mean_loss) << '\n';
  }
}

std::vector<EpisodeMetrics> ReadMetricsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "episode,return,length,avg_speed,epsilon,mean_loss") {
    throw std::runtime_error("metrics CSV has an unexpected header");
  }
  std::vector<EpisodeMetrics> out;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 6) {
      throw std::runtime_error("metrics CSV line " +
                               std::to_string(line_number) +
                               " does not have 6 fields");
    }
    const auto number = [&](const std::string& s, auto& value) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), value);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw std::runtime_error("metrics CSV line " +
                                 std::to_string(line_number) +
                                 ": bad number '" + s + "'");
      }
    };
    EpisodeMetrics m;
    number(fields[0], m.episode);
    number(fields[1], m.return_);
    number(fields[2], m.length);
    number(fields[3], m.avg_speed);
    number(fields[4], m.epsilon);
    number(fields[5], m.mean_loss);
    out.push_back(m);
  }
  return out;
}

MeanCi Summarize(const std::vector<double>& samples) {
  MeanCi out;
  if (samples.empty()) return out;
  const double n = static_cast<double>(samples.size());
  for (double x : samples) out.mean += x;
  out.mean /= n;
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (double x : samples) ss += (x - out.mean) * (x - out.mean);
  out.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

Policy GreedyPolicy(const nn::QModel& model) {
  return [&model](const sim::Scene& scene) {
    return Argmax(model.QValues(Observe(model.kind(), scene)).values);
  };
}

std::uint64_t EvaluationSeed(std::uint64_t seed, int episode) {
  return DeriveSeed(DeriveSeed(seed, kEvaluationStream),
                    static_cast<std::uint64_t>(episode));
}

EvalSummary EvaluatePolicy(const Policy& policy, const sim::EnvConfig& env,
                           int episodes, std::uint64_t seed,
                           const SceneFactory& scenes,
                           const EpisodeEnd& on_end) {
  if (episodes < 1)
    throw std::invalid_argument("evaluation needs at least one episode");
  env.Validate();
  EvalSummary summary;
  summary.episodes = episodes;
  std::vector<double> returns, lengths, speeds;
  int crashes = 0;
  for (int i = 0; i < episodes; ++i) {
    const std::uint64_t scene_seed = EvaluationSeed(seed, i);
    sim::Scene scene =
        scenes ? scenes(scene_seed) : sim::Reset(scene_seed, env);
    EpisodeMetrics m;
    m.episode = i;
    double speed_sum = 0.0;
    while (!scene.terminal) {
      const int action = policy(scene);
      if (action < 0 || action >= nn::kNumOutputs)
        throw std::logic_error("invalid action");
      sim::StepOutcome out =
          sim::Step(scene, static_cast<sim::EgoAction>(action), env);
      m.return_ += out.reward;
      ++m.length;
      speed_sum += out.next_scene.ego.v;
      m.crashed = out.crashed;
      m.arrived = out.arrived;
      scene = std::move(out.next_scene);
    }
    m.avg_speed = m.length > 0 ? speed_sum / m.length : 0.0;
    if (on_end) on_end(i, scene);
    crashes += m.crashed ? 1 : 0;
    returns.push_back(m.return_);
    lengths.push_back(m.length);
    speeds.push_back(m.avg_speed);
    summary.per_episode.push_back(m);
  }
  summary.episode_return = Summarize(returns);
  summary.length = Summarize(lengths);
  summary.avg_speed = Summarize(speeds);
  summary.crash_rate = static_cast<double>(crashes) / episodes;
  return summary;
}

EvalSummary Evaluate(const nn::QModel& model, const sim::EnvConfig& env,
                     int episodes, std::uint64_t seed) {
  return EvaluatePolicy(GreedyPolicy(model), env, episodes, seed);
}

}  // namespace dqn
}  // namespace egoattn
