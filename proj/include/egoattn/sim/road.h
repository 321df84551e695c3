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

#ifndef EGOATTN_SIM_ROAD_H_
#define EGOATTN_SIM_ROAD_H_

#include <array>
#include <vector>

namespace egoattn {
namespace sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

double Dot(Vec2 a, Vec2 b);
double Cross(Vec2 a, Vec2 b);
double Norm(Vec2 a);
Vec2 Rotate(Vec2 p, double angle);

// Wraps an angle into (-pi, pi].
double WrapAngle(double angle);

// Position along a lane: `longitudinal` from the lane start, `lateral`
// positive to the left of the travel direction.
struct LaneCoordinates {
  double longitudinal = 0.0;
  double lateral = 0.0;
};

// A directed centerline, either a straight segment or a circular arc.
class Lane {
 public:
  static Lane Straight(Vec2 start, Vec2 end);
  // Arc around `center` starting at `start_angle`; `sweep` > 0 is
  // counter-clockwise.
  static Lane Arc(Vec2 center, double radius, double start_angle, double sweep);

  double length() const { return length_; }
  bool is_arc() const { return is_arc_; }
  // Signed, positive when the lane bends left.
  double curvature() const {
    return is_arc_ ? (sweep_ > 0 ? 1.0 : -1.0) / radius_ : 0.0;
  }

  Vec2 Position(double longitudinal, double lateral = 0.0) const;
  double HeadingAt(double longitudinal) const;
  LaneCoordinates Local(Vec2 point) const;

 private:
  Lane() = default;

  bool is_arc_ = false;
  double length_ = 0.0;
  // Straight.
  Vec2 start_;
  Vec2 direction_;
  // Arc.
  Vec2 center_;
  double radius_ = 0.0;
  double start_angle_ = 0.0;
  double sweep_ = 0.0;
};

// Approach arms, named by the side of the intersection they lie on.
enum class Arm { kSouth = 0, kEast = 1, kNorth = 2, kWest = 3 };
enum class Turn { kRight = 0, kStraight = 1, kLeft = 2 };

using LaneId = int;

// Four-arm intersection with one lane per direction and right-hand
// traffic, centered at the origin with x east and y north.
//
// Lane ids: inbound arm k -> k, outbound arm k -> 4 + k, connector from arm
// k with turn t -> 8 + 3k + t.
class RoadNetwork {
 public:
  RoadNetwork(double lane_width, double approach_length);

  double lane_width() const { return lane_width_; }
  double approach_length() const { return approach_length_; }
  // Distance from the center to the stop line on every arm.
  double outer_distance() const { return outer_distance_; }

  const Lane& lane(LaneId id) const { return lanes_.at(id); }
  int lane_count() const { return static_cast<int>(lanes_.size()); }

  static LaneId Inbound(Arm arm) { return static_cast<int>(arm); }
  static LaneId Outbound(Arm arm) { return 4 + static_cast<int>(arm); }
  static LaneId Connector(Arm arm, Turn turn) {
    return 8 + 3 * static_cast<int>(arm) + static_cast<int>(turn);
  }
  static Arm Destination(Arm from, Turn turn);
  // Arm a lane belongs to; connectors map to the arm they leave from.
  static Arm ArmOf(LaneId lane);

  std::vector<LaneId> Route(Arm from, Turn turn) const;

 private:
  double lane_width_;
  double approach_length_;
  double outer_distance_;
  std::vector<Lane> lanes_;
};

}  // namespace sim
}  // namespace egoattn

#endif  // EGOATTN_SIM_ROAD_H_
