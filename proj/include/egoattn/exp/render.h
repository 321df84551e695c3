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

// SVG frames of a greedy episode: roads, vehicles as oriented rectangles
// and, for ego-attention models, one line per head from the ego to every
// vehicle with width proportional to its attention weight.

#ifndef EGOATTN_EXP_RENDER_H_
#define EGOATTN_EXP_RENDER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "egoattn/nn/layers.h"
#include "egoattn/nn/qmodel.h"
#include "egoattn/sim/env.h"

namespace egoattn {
namespace exp {

struct RenderOptions {
  double max_stroke = 12.0;      // px at weight 1
  double draw_threshold = 0.01;  // smaller weights are not drawn
  double pixels_per_meter = 5.0;
  double half_extent = 70.0;  // metres shown around the center
};

struct RenderFrame {
  int index = 0;
  sim::Scene scene;
  std::vector<sim::VehicleId> ids;  // row order of the weights, ego first
  std::optional<nn::AttentionTrace> trace;  // ego-attention only
  int action = 0;
};

// Weight of one vehicle in one head, split by the clutter threshold.
struct HeadWeightSplit {
  std::vector<std::pair<sim::VehicleId, double>> drawn;
  std::vector<std::pair<sim::VehicleId, double>> suppressed;
};

std::vector<HeadWeightSplit> SplitWeights(const RenderFrame& frame,
                                          const RenderOptions& options = {});

// Self-contained SVG with the weight split recorded in <metadata>.
std::string RenderSvg(const RenderFrame& frame,
                      const RenderOptions& options = {});

// Greedy episode of `model` from sim::Reset(scene_seed, env), one frame per
// decision. Non-attention models give frames without traces.
std::vector<RenderFrame> RecordEpisode(const nn::QModel& model,
                                       const sim::EnvConfig& env,
                                       std::uint64_t scene_seed);

// frame_000.svg, frame_001.svg, ... in `dir`; returns the paths.
std::vector<std::filesystem::path> WriteFrames(
    const std::vector<RenderFrame>& frames, const std::filesystem::path& dir,
    const RenderOptions& options = {});

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_RENDER_H_
