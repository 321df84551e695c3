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

#include "egoattn/exp/svg.h"

#include <cstdio>

namespace egoattn {
namespace exp {
namespace {

std::string Points(const std::vector<std::pair<double, double>>& points) {
  std::string out;
  for (const auto& [x, y] : points) {
    if (!out.empty()) out += ' ';
    out += SvgNumber(x) + "," + SvgNumber(y);
  }
  return out;
}

}  // namespace

std::string XmlEscape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

std::string SvgNumber(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  std::string out = buf;
  if (out == "-0.00") out = "0.00";
  return out;
}

Svg::Svg(double width, double height) {
  body_ =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg "
      "xmlns=\"http://www.w3.org/2000/svg\" "
      "width=\"" +
      SvgNumber(width) + "\" height=\"" + SvgNumber(height) +
      "\" viewBox=\"0 0 " + SvgNumber(width) + " " + SvgNumber(height) +
      "\" font-family=\"sans-serif\">\n";
}

void Svg::Rect(double x, double y, double w, double h,
               const std::string& attrs) {
  body_ += "<rect x=\"" + SvgNumber(x) + "\" y=\"" + SvgNumber(y) +
           "\" width=\"" + SvgNumber(w) + "\" height=\"" + SvgNumber(h) +
           "\" " + attrs + "/>\n";
}

void Svg::Line(double x1, double y1, double x2, double y2,
               const std::string& attrs) {
  body_ += "<line x1=\"" + SvgNumber(x1) + "\" y1=\"" + SvgNumber(y1) +
           "\" x2=\"" + SvgNumber(x2) + "\" y2=\"" + SvgNumber(y2) + "\" " +
           attrs + "/>\n";
}

void Svg::Circle(double cx, double cy, double r, const std::string& attrs) {
  body_ += "<circle cx=\"" + SvgNumber(cx) + "\" cy=\"" + SvgNumber(cy) +
           "\" r=\"" + SvgNumber(r) + "\" " + attrs + "/>\n";
}

void Svg::Polygon(const std::vector<std::pair<double, double>>& points,
                  const std::string& attrs) {
  body_ += "<polygon points=\"" + Points(points) + "\" " + attrs + "/>\n";
}

void Svg::Polyline(const std::vector<std::pair<double, double>>& points,
                   const std::string& attrs) {
  body_ += "<polyline points=\"" + Points(points) + "\" " + attrs + "/>\n";
}

void Svg::Text(double x, double y, const std::string& text,
               const std::string& attrs) {
  body_ += "<text x=\"" + SvgNumber(x) + "\" y=\"" + SvgNumber(y) + "\" " +
           attrs + ">" + XmlEscape(text) + "</text>\n";
}

void Svg::Raw(const std::string& markup) { body_ += markup; }

std::string Svg::Finish() { return body_ + "</svg>\n"; }

}  // namespace exp
}  // namespace egoattn
