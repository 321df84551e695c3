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

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "egoattn/dqn/trainer.h"
#include "egoattn/obs/observation.h"
#include "egoattn/util/atomic_file.h"
#include "gtest/gtest.h"

namespace egoattn {
namespace exp {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

pt::ptree ParseSvg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

nlohmann::json Metadata(const std::string& svg) {
  return nlohmann::json::parse(ParseSvg(svg).get<std::string>("svg.metadata"));
}

int CountElements(const pt::ptree& svg, const std::string& name,
                  const std::string& attr_part) {
  int n = 0;
  for (const auto& [tag, child] : svg) {
    if (tag != name) continue;
    const auto stroke = child.get_optional<std::string>("<xmlattr>.stroke");
    if (attr_part.empty() || (stroke && *stroke == attr_part)) ++n;
  }
  return n;
}

TEST(RenderTest, LoneEgoAttendsToItself) {
  const nn::QModel model(nn::ModelKind::kEgoAttention, 3);
  const sim::Scene scene = sim::MakeScene(sim::EnvConfig{});
  RenderFrame frame;
  frame.scene = scene;
  frame.ids = obs::ListVehicleIds(scene);
  frame.trace = model.QValues(dqn::Observe(model.kind(), scene)).trace;
  const auto splits = SplitWeights(frame);
  ASSERT_EQ(splits.size(), 2u);
  for (const HeadWeightSplit& s : splits) {
    ASSERT_EQ(s.drawn.size(), 1u);
    EXPECT_EQ(s.drawn[0].first, scene.ego.id);
    EXPECT_DOUBLE_EQ(s.drawn[0].second, 1.0);
    EXPECT_TRUE(s.suppressed.empty());
  }
  const std::string svg = RenderSvg(frame);
  const pt::ptree root = ParseSvg(svg).get_child("svg");
  EXPECT_EQ(CountElements(root, "circle", "green"), 1);
  EXPECT_EQ(CountElements(root, "circle", "blue"), 1);
  EXPECT_EQ(CountElements(root, "line", "green"), 0);
  EXPECT_NE(svg.find("stroke-width=\"12.00\""), std::string::npos);
}

TEST(RenderTest, EpisodeFramesAccountForEveryWeight) {
  const nn::QModel model(nn::ModelKind::kEgoAttention, 11);
  const sim::EnvConfig env;
  const std::vector<RenderFrame> frames = RecordEpisode(model, env, 42);
  ASSERT_FALSE(frames.empty());
  for (const RenderFrame& frame : frames) {
    ASSERT_TRUE(frame.trace.has_value());
    EXPECT_EQ(frame.ids.front(), frame.scene.ego.id);
    EXPECT_EQ(frame.ids.size(), frame.scene.others.size() + 1);
    const nlohmann::json meta = Metadata(RenderSvg(frame));
    EXPECT_EQ(meta["frame"], frame.index);
    ASSERT_EQ(meta["heads"].size(), 2u);
    for (const auto& head : meta["heads"]) {
      double sum = 0.0;
      std::set<int> ids;
      for (const auto& w : head["drawn"]) {
        EXPECT_GE(w["weight"].get<double>(), 0.01);
        sum += w["weight"].get<double>();
        ids.insert(w["id"].get<int>());
      }
      for (const auto& w : head["suppressed"]) {
        EXPECT_LT(w["weight"].get<double>(), 0.01);
        sum += w["weight"].get<double>();
        ids.insert(w["id"].get<int>());
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
      EXPECT_EQ(ids.size(), frame.ids.size());
    }
  }
}

TEST(RenderTest, StrokeWidthIsProportionalToWeight) {
  RenderFrame frame;
  frame.scene = sim::Reset(5, sim::EnvConfig{});
  frame.ids = obs::ListVehicleIds(frame.scene);
  ASSERT_GE(frame.ids.size(), 3u);
  std::vector<double> weights(frame.ids.size(), 0.0);
  weights[0] = 0.25;
  weights[1] = 0.745;
  weights[2] = 0.005;  // below the threshold
  frame.trace = nn::AttentionTrace{{weights}};
  const std::string svg = RenderSvg(frame);
  EXPECT_NE(svg.find("stroke-width=\"8.94\""),
            std::string::npos);  // 12 * 0.745
  EXPECT_NE(svg.find("stroke-width=\"3.00\""),
            std::string::npos);  // 12 * 0.25, ring
  EXPECT_EQ(svg.find("stroke-width=\"0.06\""),
            std::string::npos);  // suppressed
  const pt::ptree root = ParseSvg(svg).get_child("svg");
  EXPECT_EQ(CountElements(root, "line", "green"), 1);
  const nlohmann::json meta = Metadata(svg);
  ASSERT_EQ(meta["heads"][0]["suppressed"].size(), frame.ids.size() - 2);
  frame.trace->heads[0].pop_back();
  EXPECT_THROW(SplitWeights(frame), std::invalid_argument);
}

TEST(RenderTest, OtherModelsRenderTheSceneOnly) {
  const nn::QModel model(nn::ModelKind::kFcn, 1);
  const std::vector<RenderFrame> frames =
      RecordEpisode(model, sim::EnvConfig{}, 9);
  ASSERT_FALSE(frames.empty());
  for (const RenderFrame& frame : frames) {
    EXPECT_FALSE(frame.trace.has_value());
    const std::string svg = RenderSvg(frame);
    const pt::ptree root = ParseSvg(svg).get_child("svg");
    EXPECT_EQ(CountElements(root, "line", "green"), 0);
    EXPECT_EQ(CountElements(root, "circle", ""), 0);
    EXPECT_EQ(Metadata(svg)["heads"].size(), 0u);
  }
}

TEST(RenderTest, FramesAreValidSelfContainedXmlOnDisk) {
  const nn::QModel model(nn::ModelKind::kEgoAttention, 2);
  const std::vector<RenderFrame> frames =
      RecordEpisode(model, sim::EnvConfig{}, 1);
  const fs::path dir = fs::temp_directory_path() / "egoattn_render_frames";
  fs::remove_all(dir);
  const auto paths = WriteFrames(frames, dir);
  ASSERT_EQ(paths.size(), frames.size());
  EXPECT_EQ(paths.front().filename(), "frame_000.svg");
  for (const fs::path& p : paths) {
    const std::string svg = util::ReadFile(p);
    EXPECT_NO_THROW(ParseSvg(svg)) << p;
    EXPECT_EQ(svg.find("href"), std::string::npos);
    EXPECT_EQ(svg.find("<image"), std::string::npos);
  }
}

}  // namespace
}  // namespace exp
}  // namespace egoattn
