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

#include "egoattn/exp/render.h"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "egoattn/dqn/trainer.h"
#include "egoattn/exp/svg.h"
#include "egoattn/obs/observation.h"
#include "egoattn/sim/road.h"
#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace exp {
namespace {

constexpr const char* kHeadColors[] = {"green",  "blue",  "orange",
                                       "purple", "brown", "teal"};

const char* HeadColor(std::size_t head) { return kHeadColors[head % 6]; }

class View {
 public:
  explicit View(const RenderOptions& o) : o_(o) {}
  double size() const { return 2.0 * o_.half_extent * o_.pixels_per_meter; }
  double X(double x) const {
    return (x + o_.half_extent) * o_.pixels_per_meter;
  }
  double Y(double y) const {
    return (o_.half_extent - y) * o_.pixels_per_meter;
  }
  double Length(double m) const { return m * o_.pixels_per_meter; }

 private:
  const RenderOptions& o_;
};

std::vector<std::pair<double, double>> VehicleOutline(
    const sim::VehicleState& v, const View& view) {
  const double c = std::cos(v.psi);
  const double s = std::sin(v.psi);
  const double hl = v.length / 2.0;
  const double hw = v.width / 2.0;
  std::vector<std::pair<double, double>> points;
  for (auto [dl, dw] : {std::pair{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}) {
    points.emplace_back(view.X(v.x + c * dl - s * dw),
                        view.Y(v.y + s * dl + c * dw));
  }
  return points;
}

void DrawRoads(const sim::RoadNetwork& roads, const View& view, Svg& svg) {
  const std::string width = SvgNumber(view.Length(roads.lane_width()));
  for (int pass = 0; pass < 2; ++pass) {
    for (sim::LaneId id = 0; id < roads.lane_count(); ++id) {
      const sim::Lane& lane = roads.lane(id);
      const bool connector = id >= 8;
      std::vector<std::pair<double, double>> points;
      const int samples = lane.is_arc() ? 24 : 1;
      for (int i = 0; i <= samples; ++i) {
        const sim::Vec2 p = lane.Position(lane.length() * i / samples);
        points.emplace_back(view.X(p.x), view.Y(p.y));
      }
      if (pass == 0) {
        svg.Polyline(
            points, "fill=\"none\" stroke=\"#b0b0b0\" stroke-width=\"" + width +
                        "\" stroke-linecap=\"butt\"");
      } else if (!connector) {
        svg.Polyline(points,
                     "fill=\"none\" stroke=\"white\" stroke-width=\"1\" "
                     "stroke-dasharray=\"6,6\"");
      }
    }
  }
}

}  // namespace

std::vector<HeadWeightSplit> SplitWeights(const RenderFrame& frame,
                                          const RenderOptions& options) {
  std::vector<HeadWeightSplit> out;
  if (!frame.trace) return out;
  for (const std::vector<double>& weights : frame.trace->heads) {
    if (weights.size() != frame.ids.size()) {
      throw std::invalid_argument(
          "attention weights do not match the vehicle ids");
    }
    HeadWeightSplit split;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      auto& bucket =
          weights[j] >= options.draw_threshold ? split.drawn : split.suppressed;
      bucket.emplace_back(frame.ids[j], weights[j]);
    }
    out.push_back(std::move(split));
  }
  return out;
}

std::string RenderSvg(const RenderFrame& frame, const RenderOptions& options) {
  const View view(options);
  const sim::Scene& scene = frame.scene;
  Svg svg(view.size(), view.size());
  svg.Rect(0, 0, view.size(), view.size(), "fill=\"#e8f0e0\"");
  if (scene.roads) DrawRoads(*scene.roads, view, svg);

  const std::vector<HeadWeightSplit> splits = SplitWeights(frame, options);
  nlohmann::ordered_json meta;
  meta["frame"] = frame.index;
  meta["decision"] = scene.decisions;
  meta["time"] = scene.time();
  meta["action"] = frame.action;
  meta["draw_threshold"] = options.draw_threshold;
  meta["max_stroke"] = options.max_stroke;
  meta["heads"] = nlohmann::ordered_json::array();
  for (std::size_t h = 0; h < splits.size(); ++h) {
    nlohmann::ordered_json head;
    head["color"] = HeadColor(h);
    for (const char* key : {"drawn", "suppressed"}) {
      head[key] = nlohmann::ordered_json::array();
      const auto& bucket =
          std::string(key) == "drawn" ? splits[h].drawn : splits[h].suppressed;
      for (const auto& [id, w] : bucket)
        head[key].push_back({{"id", id}, {"weight", w}});
    }
    meta["heads"].push_back(head);
  }
  svg.Raw("<metadata>" + XmlEscape(meta.dump()) + "</metadata>\n");

  for (const sim::VehicleState& v : scene.others) {
    svg.Polygon(VehicleOutline(v, view),
                std::string("fill=\"#4a6fa5\" stroke=\"") +
                    (v.crashed ? "red" : "#203040") + "\" stroke-width=\"" +
                    (v.crashed ? "2" : "1") + "\"");
  }
  svg.Polygon(VehicleOutline(scene.ego, view),
              std::string("fill=\"#f2b705\" stroke=\"") +
                  (scene.ego.crashed ? "red" : "black") +
                  "\" stroke-width=\"2\"");

  // Attention: lines to other vehicles, a ring around the ego for itself.
  const double ex = view.X(scene.ego.x);
  const double ey = view.Y(scene.ego.y);
  for (std::size_t h = 0; h < splits.size(); ++h) {
    const std::string color = HeadColor(h);
    for (const auto& [id, w] : splits[h].drawn) {
      const std::string stroke = "stroke=\"" + color +
                                 "\" stroke-opacity=\"0.7\" stroke-width=\"" +
                                 SvgNumber(options.max_stroke * w) + "\"";
      if (id == scene.ego.id) {
        const double r = view.Length(scene.ego.length) *
                         (0.8 + 0.4 * static_cast<double>(h));
        svg.Circle(ex, ey, r, "fill=\"none\" " + stroke);
        continue;
      }
      const sim::VehicleState* v = scene.Find(id);
      if (v == nullptr) continue;
      svg.Line(ex, ey, view.X(v->x), view.Y(v->y),
               stroke + " stroke-linecap=\"round\"");
    }
  }

  char caption[96];
  std::snprintf(caption, sizeof(caption),
                "decision %d  t = %.1f s  ego %.1f m/s", scene.decisions,
                scene.time(), scene.ego.v);
  svg.Text(10, 20, caption, "font-size=\"14\"");
  for (std::size_t h = 0; h < splits.size(); ++h) {
    svg.Text(10, 40 + 18 * static_cast<double>(h),
             "head " + std::to_string(h + 1),
             "font-size=\"13\" fill=\"" + std::string(HeadColor(h)) + "\"");
  }
  return svg.Finish();
}

std::vector<RenderFrame> RecordEpisode(const nn::QModel& model,
                                       const sim::EnvConfig& env,
                                       std::uint64_t scene_seed) {
  env.Validate();
  std::vector<RenderFrame> frames;
  sim::Scene scene = sim::Reset(scene_seed, env);
  while (!scene.terminal) {
    RenderFrame frame;
    frame.index = static_cast<int>(frames.size());
    frame.scene = scene;
    const nn::QOutput q = model.QValues(dqn::Observe(model.kind(), scene));
    frame.action = dqn::Argmax(q.values);
    if (q.trace) {
      frame.ids = obs::ListVehicleIds(scene);
      frame.trace = q.trace;
    }
    scene = sim::Step(scene, static_cast<sim::EgoAction>(frame.action), env)
                .next_scene;
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<std::filesystem::path> WriteFrames(
    const std::vector<RenderFrame>& frames, const std::filesystem::path& dir,
    const RenderOptions& options) {
  std::vector<std::filesystem::path> paths;
  for (const RenderFrame& frame : frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.svg", frame.index);
    paths.push_back(dir / name);
    util::WriteFileAtomic(paths.back(), RenderSvg(frame, options));
  }
  return paths;
}

}  // namespace exp
}  // namespace egoattn
