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
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "egoattn/exp/runner.h"
#include "egoattn/exp/svg.h"
#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace exp {
namespace {

std::string Fixed(double value, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

// Tick spacing of 1, 2 or 5 times a power of ten giving about `count` ticks.
double TickStep(double span, int count) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / count;
  const double power = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * power >= raw) return m * power;
  }
  return 10.0 * power;
}

std::string AgentColor(const std::string& agent, std::size_t index) {
  static const std::map<std::string, std::string> kColors = {
      {"fcn_list", "#d62728"},
      {"cnn_grid", "#1f77b4"},
      {"ego_attention", "#2ca02c"}};
  static const char* kPalette[] = {"#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                   "#bcbd22"};
  const auto it = kColors.find(agent);
  return it != kColors.end() ? it->second : kPalette[index % 5];
}

}  // namespace

std::string MetricName(Metric metric) {
  switch (metric) {
    case Metric::kReturn:
      return "return";
    case Metric::kLength:
      return "length";
    case Metric::kAvgSpeed:
      return "avg_speed";
  }
  return "";
}

double MetricValue(const dqn::EpisodeMetrics& m, Metric metric) {
  switch (metric) {
    case Metric::kReturn:
      return m.return_;
    case Metric::kLength:
      return m.length;
    case Metric::kAvgSpeed:
      return m.avg_speed;
  }
  return 0.0;
}

std::vector<RunMetrics> FindRuns(
    const std::vector<std::filesystem::path>& roots) {
  std::vector<RunMetrics> runs;
  auto add = [&](const std::filesystem::path& file) {
    const std::filesystem::path seed_dir = file.parent_path();
    RunMetrics run;
    run.agent = seed_dir.parent_path().filename().string();
    run.source = seed_dir.string();
    run.metrics = ReadMetricsFile(file);
    runs.push_back(std::move(run));
  };
  for (const std::filesystem::path& root : roots) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root, ec)) {
      throw util::IoError("not a directory: " + root.string());
    }
    if (std::filesystem::is_regular_file(root / kMetricsFile)) {
      add(std::filesystem::absolute(root) / kMetricsFile);
      continue;
    }
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == kMetricsFile) {
        add(std::filesystem::absolute(entry.path()));
      }
    }
  }
  std::sort(runs.begin(), runs.end(),
            [](const RunMetrics& a, const RunMetrics& b) {
              return std::tie(a.agent, a.source) < std::tie(b.agent, b.source);
            });
  return runs;
}

std::vector<double> TrailingMean(const std::vector<double>& values,
                                 int window) {
  if (window < 1) throw std::invalid_argument("window must be at least 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t n = std::min<std::size_t>(i + 1, window);
    double sum = 0.0;
    for (std::size_t j = i + 1 - n; j <= i; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

Comparison Compare(const std::vector<RunMetrics>& runs, int window,
                   int final_window) {
  if (runs.size() < 2)
    throw std::invalid_argument("compare needs at least two runs");
  if (window < 1 || final_window < 1)
    throw std::invalid_argument("windows must be positive");
  Comparison c;
  c.window = window;
  c.final_window = final_window;
  std::size_t shortest = runs.front().metrics.size();
  std::size_t longest = shortest;
  for (const RunMetrics& run : runs) {
    shortest = std::min(shortest, run.metrics.size());
    longest = std::max(longest, run.metrics.size());
  }
  if (shortest == 0) throw std::invalid_argument("a run has no episodes");
  if (shortest != longest) {
    c.warnings.push_back("episode counts differ (" + std::to_string(shortest) +
                         " to " + std::to_string(longest) +
                         "); truncated to the first " +
                         std::to_string(shortest));
  }
  c.episodes = static_cast<int>(shortest);
  const int final_n = std::min(final_window, c.episodes);

  std::map<std::string, std::vector<const RunMetrics*>> groups;
  for (const RunMetrics& run : runs) groups[run.agent].push_back(&run);
  for (const auto& [agent, members] : groups) {
    AgentCurves curves;
    curves.agent = agent;
    curves.seeds = static_cast<int>(members.size());
    for (std::size_t k = 0; k < kMetrics.size(); ++k) {
      std::vector<std::vector<double>> smoothed;
      std::vector<double> finals;
      for (const RunMetrics* run : members) {
        std::vector<double> values(shortest);
        for (std::size_t e = 0; e < shortest; ++e) {
          values[e] = MetricValue(run->metrics[e], kMetrics[k]);
        }
        double sum = 0.0;
        for (std::size_t e = shortest - final_n; e < shortest; ++e)
          sum += values[e];
        finals.push_back(sum / final_n);
        smoothed.push_back(TrailingMean(values, window));
      }
      curves.final[k] = dqn::Summarize(finals);
      curves.curves[k].resize(shortest);
      std::vector<double> column(members.size());
      for (std::size_t e = 0; e < shortest; ++e) {
        for (std::size_t s = 0; s < members.size(); ++s)
          column[s] = smoothed[s][e];
        curves.curves[k][e] = dqn::Summarize(column);
      }
    }
    c.agents.push_back(std::move(curves));
  }
  return c;
}

std::string CurvesCsv(const Comparison& c) {
  std::string out = "agent,episode";
  for (Metric m : kMetrics)
    out += "," + MetricName(m) + "_mean," + MetricName(m) + "_ci";
  out += "\n";
  for (const AgentCurves& a : c.agents) {
    for (int e = 0; e < c.episodes; ++e) {
      out += a.agent + "," + std::to_string(e);
      for (std::size_t k = 0; k < kMetrics.size(); ++k) {
        out += "," + Fixed(a.curves[k][e].mean) + "," +
               Fixed(a.curves[k][e].half_width);
      }
      out += "\n";
    }
  }
  return out;
}

std::string SummaryCsv(const Comparison& c) {
  std::string out = "agent,seeds,episodes";
  for (Metric m : kMetrics)
    out += "," + MetricName(m) + "_mean," + MetricName(m) + "_ci";
  out += "\n";
  for (const AgentCurves& a : c.agents) {
    out += a.agent + "," + std::to_string(a.seeds) + "," +
           std::to_string(std::min(c.final_window, c.episodes));
    for (std::size_t k = 0; k < kMetrics.size(); ++k) {
      out += "," + Fixed(a.final[k].mean) + "," + Fixed(a.final[k].half_width);
    }
    out += "\n";
  }
  return out;
}

std::string CurveSvg(const Comparison& c, Metric metric) {
  const std::size_t k = static_cast<std::size_t>(metric);
  constexpr double kWidth = 760, kHeight = 440;
  constexpr double kLeft = 70, kRight = 210, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double lo = INFINITY, hi = -INFINITY;
  for (const AgentCurves& a : c.agents) {
    for (const dqn::MeanCi& p : a.curves[k]) {
      lo = std::min(lo, p.mean - p.half_width);
      hi = std::max(hi, p.mean + p.half_width);
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double y_step = TickStep(hi - lo, 5);
  lo = std::floor(lo / y_step) * y_step;
  hi = std::ceil(hi / y_step) * y_step;
  const double x_max = std::max(1, c.episodes - 1);
  auto px = [&](double episode) { return kLeft + plot_w * episode / x_max; };
  auto py = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  Svg svg(kWidth, kHeight);
  svg.Rect(0, 0, kWidth, kHeight, "fill=\"white\"");
  svg.Text(kLeft + plot_w / 2, 22,
           MetricName(metric) + " (trailing mean over " +
               std::to_string(c.window) +
               " episodes, 95% interval across seeds)",
           "text-anchor=\"middle\" font-size=\"14\"");
  // Axes and grid.
  for (double v = lo; v <= hi + 1e-9 * y_step; v += y_step) {
    svg.Line(kLeft, py(v), kLeft + plot_w, py(v),
             "stroke=\"#dddddd\" stroke-width=\"1\"");
    char label[32];
    std::snprintf(label, sizeof(label), "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    svg.Text(kLeft - 6, py(v) + 4, label,
             "text-anchor=\"end\" font-size=\"11\"");
  }
  const double x_step = TickStep(x_max, 6);
  for (double e = 0; e <= x_max + 1e-9; e += x_step) {
    svg.Line(px(e), kTop + plot_h, px(e), kTop + plot_h + 5,
             "stroke=\"black\"");
    char label[32];
    std::snprintf(label, sizeof(label), "%g", e);
    svg.Text(px(e), kTop + plot_h + 18, label,
             "text-anchor=\"middle\" font-size=\"11\"");
  }
  svg.Line(kLeft, kTop, kLeft, kTop + plot_h, "stroke=\"black\"");
  svg.Line(kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h,
           "stroke=\"black\"");
  svg.Text(kLeft + plot_w / 2, kHeight - 18, "episode",
           "text-anchor=\"middle\" font-size=\"12\"");

  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    const AgentCurves& a = c.agents[i];
    const std::string color = AgentColor(a.agent, i);
    std::vector<std::pair<double, double>> band, line;
    for (int e = 0; e < c.episodes; ++e) {
      const dqn::MeanCi& p = a.curves[k][e];
      band.emplace_back(px(e), py(p.mean + p.half_width));
      line.emplace_back(px(e), py(p.mean));
    }
    for (int e = c.episodes - 1; e >= 0; --e) {
      const dqn::MeanCi& p = a.curves[k][e];
      band.emplace_back(px(e), py(p.mean - p.half_width));
    }
    svg.Polygon(band,
                "fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"");
    svg.Polyline(line,
                 "fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"");
    const double ly = kTop + 16 + 20 * static_cast<double>(i);
    svg.Line(kLeft + plot_w + 12, ly - 4, kLeft + plot_w + 32, ly - 4,
             "stroke=\"" + color + "\" stroke-width=\"3\"");
    svg.Text(kLeft + plot_w + 38, ly,
             a.agent + " (" + std::to_string(a.seeds) +
                 (a.seeds == 1 ? " seed)" : " seeds)"),
             "font-size=\"11\"");
  }
  return svg.Finish();
}

void WriteComparison(const Comparison& c, const std::filesystem::path& dir) {
  util::WriteFileAtomic(dir / "compare.csv", CurvesCsv(c));
  util::WriteFileAtomic(dir / "summary.csv", SummaryCsv(c));
  for (Metric m : kMetrics) {
    util::WriteFileAtomic(dir / (MetricName(m) + ".svg"), CurveSvg(c, m));
  }
}

}  // namespace exp
}  // namespace egoattn
