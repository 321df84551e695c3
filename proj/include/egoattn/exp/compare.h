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

// Learning-curve comparison across agents and seeds: trailing-mean curves
// with an across-seed 95% interval, a final-window summary, CSV and SVG.

#ifndef EGOATTN_EXP_COMPARE_H_
#define EGOATTN_EXP_COMPARE_H_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "egoattn/dqn/trainer.h"

namespace egoattn {
namespace exp {

enum class Metric { kReturn, kLength, kAvgSpeed };
inline constexpr std::array<Metric, 3> kMetrics = {
    Metric::kReturn, Metric::kLength, Metric::kAvgSpeed};

// "return", "length", "avg_speed".
std::string MetricName(Metric metric);
double MetricValue(const dqn::EpisodeMetrics& m, Metric metric);

struct RunMetrics {
  std::string agent;
  std::string source;  // where the metrics came from
  std::vector<dqn::EpisodeMetrics> metrics;
};

// Every metrics.csv under `roots` (a root may itself be a run directory).
// The agent is the name of the directory above the seed directory, as laid
// out by RunDirectory. Sorted by agent, then source.
std::vector<RunMetrics> FindRuns(
    const std::vector<std::filesystem::path>& roots);

// Mean of the last `window` values up to and including each index; shorter
// at the start.
std::vector<double> TrailingMean(const std::vector<double>& values, int window);

struct AgentCurves {
  std::string agent;
  int seeds = 0;
  // Per metric and episode: across-seed mean of the smoothed curves.
  std::array<std::vector<dqn::MeanCi>, 3> curves;
  // Per metric: across-seed mean of each seed's mean over the final window.
  std::array<dqn::MeanCi, 3> final;
};

struct Comparison {
  int episodes = 0;
  int window = 0;
  int final_window = 0;
  std::vector<AgentCurves> agents;  // sorted by agent
  std::vector<std::string> warnings;
};

// Needs at least two runs (std::invalid_argument otherwise). Runs of
// different lengths are truncated to the shortest, with a warning.
Comparison Compare(const std::vector<RunMetrics>& runs, int window = 50,
                   int final_window = 100);

// `agent,episode,<metric>_mean,<metric>_ci,...`; ci is the half-width.
std::string CurvesCsv(const Comparison& comparison);
// `agent,seeds,episodes,<metric>_mean,<metric>_ci,...` over the final window.
std::string SummaryCsv(const Comparison& comparison);
// Line chart of one metric, one line and shaded interval per agent.
std::string CurveSvg(const Comparison& comparison, Metric metric);

// compare.csv, summary.csv and <metric>.svg, each written atomically.
void WriteComparison(const Comparison& comparison,
                     const std::filesystem::path& dir);

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_COMPARE_H_
