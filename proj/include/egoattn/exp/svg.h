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

// Minimal self-contained SVG writer. Attribute strings are trusted; text
// content is escaped.

#ifndef EGOATTN_EXP_SVG_H_
#define EGOATTN_EXP_SVG_H_

#include <string>
#include <utility>
#include <vector>

namespace egoattn {
namespace exp {

// &, <, >, " and ' as entities.
std::string XmlEscape(const std::string& text);

class Svg {
 public:
  Svg(double width, double height);

  void Rect(double x, double y, double w, double h, const std::string& attrs);
  void Line(double x1, double y1, double x2, double y2,
            const std::string& attrs);
  void Circle(double cx, double cy, double r, const std::string& attrs);
  void Polygon(const std::vector<std::pair<double, double>>& points,
               const std::string& attrs);
  void Polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& attrs);
  void Text(double x, double y, const std::string& text,
            const std::string& attrs);
  // Arbitrary element text, e.g. <metadata>; not escaped.
  void Raw(const std::string& markup);

  // Closes the document and returns it.
  std::string Finish();

 private:
  std::string body_;
};

// Two decimals, without a negative zero.
std::string SvgNumber(double value);

}  // namespace exp
}  // namespace egoattn

#endif  // EGOATTN_EXP_SVG_H_
