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

#include "egoattn/sim/road.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace egoattn {
namespace sim {

double Dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double Cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double Norm(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 Rotate(Vec2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

double WrapAngle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

Lane Lane::Straight(Vec2 start, Vec2 end) {
  Lane lane;
  lane.start_ = start;
  lane.length_ = Norm(end - start);
  if (lane.length_ <= 0.0) throw std::invalid_argument("degenerate lane");
  lane.direction_ = (1.0 / lane.length_) * (end - start);
  return lane;
}

Lane Lane::Arc(Vec2 center, double radius, double start_angle, double sweep) {
  if (radius <= 0.0 || sweep == 0.0) {
    throw std::invalid_argument("degenerate arc");
  }
  Lane lane;
  lane.is_arc_ = true;
  lane.center_ = center;
  lane.radius_ = radius;
  lane.start_angle_ = start_angle;
  lane.sweep_ = sweep;
  lane.length_ = radius * std::abs(sweep);
  return lane;
}

Vec2 Lane::Position(double longitudinal, double lateral) const {
  if (!is_arc_) {
    const Vec2 left{-direction_.y, direction_.x};
    return start_ + longitudinal * direction_ + lateral * left;
  }
  const double sign = sweep_ > 0 ? 1.0 : -1.0;
  const double phi = start_angle_ + sign * longitudinal / radius_;
  // Left of a counter-clockwise arc points at the center.
  const double r = radius_ - sign * lateral;
  return center_ + r * Vec2{std::cos(phi), std::sin(phi)};
}

double Lane::HeadingAt(double longitudinal) const {
  if (!is_arc_) return std::atan2(direction_.y, direction_.x);
  const double sign = sweep_ > 0 ? 1.0 : -1.0;
  const double phi = start_angle_ + sign * longitudinal / radius_;
  return WrapAngle(phi + sign * std::numbers::pi / 2.0);
}

LaneCoordinates Lane::Local(Vec2 point) const {
  if (!is_arc_) {
    const Vec2 d = point - start_;
    return {Dot(d, direction_), Cross(direction_, d)};
  }
  const double sign = sweep_ > 0 ? 1.0 : -1.0;
  const Vec2 d = point - center_;
  const double phi = std::atan2(d.y, d.x);
  const double delta = WrapAngle(phi - start_angle_);
  return {sign * delta * radius_, sign * (radius_ - Norm(d))};
}

RoadNetwork::RoadNetwork(double lane_width, double approach_length)
    : lane_width_(lane_width), approach_length_(approach_length) {
  if (!(lane_width > 0.0))
    throw std::invalid_argument("lane width must be > 0");
  if (!(approach_length > 0.0)) {
    throw std::invalid_argument("approach length must be > 0");
  }
  constexpr double kPi = std::numbers::pi;
  const double half = lane_width / 2.0;
  // Right turns get a lane-width plus 5 m radius, the box edge sits half a
  // lane further out.
  outer_distance_ = lane_width + 5.0 + half;
  const double outer = outer_distance_;
  const double far = outer + approach_length;

  std::vector<Lane> lanes(20, Lane::Straight({0, 0}, {1, 0}));
  for (int k = 0; k < 4; ++k) {
    const double theta = k * kPi / 2.0;
    auto rot = [theta](Vec2 p) { return Rotate(p, theta); };
    lanes[k] = Lane::Straight(rot({half, -far}), rot({half, -outer}));
    lanes[4 + k] = Lane::Straight(rot({-half, -outer}), rot({-half, -far}));
    lanes[8 + 3 * k + static_cast<int>(Turn::kRight)] =
        Lane::Arc(rot({outer, -outer}), outer - half, kPi + theta, -kPi / 2.0);
    lanes[8 + 3 * k + static_cast<int>(Turn::kStraight)] =
        Lane::Straight(rot({half, -outer}), rot({half, outer}));
    lanes[8 + 3 * k + static_cast<int>(Turn::kLeft)] =
        Lane::Arc(rot({-outer, -outer}), outer + half, theta, kPi / 2.0);
  }
  lanes_ = std::move(lanes);
}

Arm RoadNetwork::Destination(Arm from, Turn turn) {
  return static_cast<Arm>(
      (static_cast<int>(from) + 1 + static_cast<int>(turn)) % 4);
}

Arm RoadNetwork::ArmOf(LaneId lane) {
  if (lane < 4) return static_cast<Arm>(lane);
  if (lane < 8) return static_cast<Arm>(lane - 4);
  return static_cast<Arm>((lane - 8) / 3);
}

std::vector<LaneId> RoadNetwork::Route(Arm from, Turn turn) const {
  return {Inbound(from), Connector(from, turn),
          Outbound(Destination(from, turn))};
}

}  // namespace sim
}  // namespace egoattn
