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

#include "egoattn/exp/compare.h"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "egoattn/exp/runner.h"
#include "egoattn/util/atomic_file.h"
#include "gtest/gtest.h"

namespace egoattn {
namespace exp {
namespace {

namespace fs = std::filesystem;

std::vector<dqn::EpisodeMetrics> Ramp(int episodes, double offset) {
  std::vector<dqn::EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) {
    dqn::EpisodeMetrics m;
    m.episode = e;
    m.return_ = offset + e;
    m.length = 13 - e % 3;
    m.avg_speed = 0.5 * e + offset;
    out.push_back(m);
  }
  return out;
}

void ExpectValidXml(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_EQ(tree.count("svg"), 1u);
  EXPECT_EQ(svg.find("href"), std::string::npos);
  EXPECT_EQ(svg.find("url("), std::string::npos);
}

TEST(TrailingMeanTest, HandValues) {
  const std::vector<double> out = TrailingMean({1, 2, 3, 4, 10}, 2);
  EXPECT_EQ(out, (std::vector<double>{1, 1.5, 2.5, 3.5, 7}));
  EXPECT_EQ(TrailingMean({4, 8}, 50), (std::vector<double>{4, 6}));
  EXPECT_THROW(TrailingMean({1}, 0), std::invalid_argument);
}

TEST(CompareTest, OneSeedPerAgentHasZeroWidth) {
  const std::vector<RunMetrics> runs = {{"a", "a/0", Ramp(10, 0)},
                                        {"b", "b/0", Ramp(10, 1)}};
  const Comparison c = Compare(runs, 3, 4);
  ASSERT_EQ(c.agents.size(), 2u);
  for (const AgentCurves& a : c.agents) {
    EXPECT_EQ(a.seeds, 1);
    for (const auto& curve : a.curves) {
      for (const dqn::MeanCi& p : curve) EXPECT_EQ(p.half_width, 0.0);
    }
  }
  // Agent a, return: trailing mean of 0..9 over 3, final 4 of the raw values.
  EXPECT_DOUBLE_EQ(c.agents[0].curves[0][0].mean, 0.0);
  EXPECT_DOUBLE_EQ(c.agents[0].curves[0][1].mean, 0.5);
  EXPECT_DOUBLE_EQ(c.agents[0].curves[0][9].mean, 8.0);
  EXPECT_DOUBLE_EQ(c.agents[0].final[0].mean, 7.5);
  EXPECT_DOUBLE_EQ(c.agents[1].final[0].mean, 8.5);
}

TEST(CompareTest, IdenticalFilesGiveIdenticalCurvesAndZeroInterval) {
  const std::vector<RunMetrics> runs = {{"a", "a/0", Ramp(60, 2)},
                                        {"a", "a/1", Ramp(60, 2)}};
  const Comparison c = Compare(runs);
  ASSERT_EQ(c.agents.size(), 1u);
  EXPECT_EQ(c.agents[0].seeds, 2);
  const std::vector<double> single = TrailingMean(
      [] {
        std::vector<double> r;
        for (const auto& m : Ramp(60, 2)) r.push_back(m.return_);
        return r;
      }(),
      50);
  for (int e = 0; e < 60; ++e) {
    EXPECT_EQ(c.agents[0].curves[0][e].mean, single[e]);
    EXPECT_EQ(c.agents[0].curves[0][e].half_width, 0.0);
  }
}

TEST(CompareTest, IntervalAcrossSeeds) {
  // Final-window means 1 and 3: mean 2, s = sqrt(2), half-width 1.96 s /
  // sqrt(2).
  std::vector<RunMetrics> runs = {{"a", "a/0", Ramp(1, 1)},
                                  {"a", "a/1", Ramp(1, 3)}};
  const Comparison c = Compare(runs, 50, 100);
  EXPECT_DOUBLE_EQ(c.agents[0].final[0].mean, 2.0);
  EXPECT_NEAR(c.agents[0].final[0].half_width, 1.96, 1e-12);
}

TEST(CompareTest, MismatchedLengthsAreTruncatedWithAWarning) {
  const std::vector<RunMetrics> runs = {{"a", "a/0", Ramp(10, 0)},
                                        {"b", "b/0", Ramp(7, 0)}};
  const Comparison c = Compare(runs);
  EXPECT_EQ(c.episodes, 7);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("truncated"), std::string::npos);
  for (const AgentCurves& a : c.agents) EXPECT_EQ(a.curves[0].size(), 7u);
  EXPECT_TRUE(Compare({{"a", "a/0", Ramp(5, 0)}, {"b", "b/0", Ramp(5, 0)}})
                  .warnings.empty());
}

TEST(CompareTest, NeedsTwoRuns) {
  EXPECT_THROW(Compare({{"a", "a/0", Ramp(5, 0)}}), std::invalid_argument);
  EXPECT_THROW(Compare({{"a", "a/0", Ramp(5, 0)}, {"b", "b/0", {}}}),
               std::invalid_argument);
}

TEST(CompareTest, CsvLayout) {
  const Comparison c =
      Compare({{"a", "a/0", Ramp(3, 0)}, {"b", "b/0", Ramp(3, 0)}}, 2, 2);
  const std::string csv = CurvesCsv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "agent,episode,return_mean,return_ci,length_mean,length_ci,avg_"
            "speed_mean,"
            "avg_speed_ci");
  EXPECT_NE(
      csv.find(
          "\na,1,0.500000,0.000000,12.500000,0.000000,0.250000,0.000000\n"),
      std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  const std::string summary = SummaryCsv(c);
  EXPECT_NE(
      summary.find(
          "\na,1,2,1.500000,0.000000,11.500000,0.000000,0.750000,0.000000\n"),
      std::string::npos);
}

TEST(CompareTest, SvgIsSelfContainedXml) {
  const Comparison c = Compare(
      {{"fcn_list", "f/0", Ramp(80, 0)}, {"ego<&>", "e/0", Ramp(80, 3)}});
  for (Metric m : kMetrics) ExpectValidXml(CurveSvg(c, m));
  // Flat curves must not break the axis range.
  const Comparison flat =
      Compare({{"a", "a/0", Ramp(1, 0)}, {"a", "a/1", Ramp(1, 0)}});
  ExpectValidXml(CurveSvg(flat, Metric::kReturn));
}

TEST(CompareTest, FindsRunsOnDiskAndIsPure) {
  const fs::path root = fs::temp_directory_path() / "egoattn_compare_runs";
  fs::remove_all(root);
  for (const char* agent : {"fcn_list", "ego_attention"}) {
    for (int seed : {0, 1}) {
      std::ostringstream csv;
      dqn::WriteMetricsCsv(csv, Ramp(20, seed));
      util::WriteFileAtomic(root / agent / std::to_string(seed) / kMetricsFile,
                            csv.str());
    }
  }
  const auto runs = FindRuns({root});
  ASSERT_EQ(runs.size(), 4u);
  EXPECT_EQ(runs[0].agent, "ego_attention");
  EXPECT_EQ(runs[3].agent, "fcn_list");
  const auto single = FindRuns({root / "fcn_list" / "1"});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].agent, "fcn_list");

  const Comparison a = Compare(runs);
  const Comparison b =
      Compare(FindRuns({root / "fcn_list", root / "ego_attention"}));
  EXPECT_EQ(CurvesCsv(a), CurvesCsv(b));
  EXPECT_EQ(CurveSvg(a, Metric::kLength), CurveSvg(b, Metric::kLength));

  WriteComparison(a, root / "report");
  for (const char* name : {"compare.csv", "summary.csv", "return.svg",
                           "length.svg", "avg_speed.svg"}) {
    EXPECT_TRUE(fs::is_regular_file(root / "report" / name)) << name;
  }
  EXPECT_THROW(FindRuns({root / "missing"}), util::IoError);
}

}  // namespace
}  // namespace exp
}  // namespace egoattn
