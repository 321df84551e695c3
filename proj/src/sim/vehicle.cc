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

#include "egoattn/sim/vehicle.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace egoattn {
namespace sim {

VehicleState BicycleStep(const VehicleState& state, double accel,
                         double steering, double dt) {
  const double delta = std::clamp(steering, -kSteeringMax, kSteeringMax);
  const double beta = std::atan(0.5 * std::tan(delta));
  VehicleState next = state;
  next.x += state.v * std::cos(state.psi + beta) * dt;
  next.y += state.v * std::sin(state.psi + beta) * dt;
  next.psi =
      WrapAngle(state.psi + state.v / state.length * std::sin(beta) * dt);
  next.v = std::max(0.0, state.v + accel * dt);
  return next;
}

double IdmAcceleration(const VehicleState& follower,
                       const std::optional<Leader>& leader,
                       const IdmParams& p) {
  const double v = follower.v;
  double accel =
      p.max_accel * (1.0 - std::pow(v / p.desired_speed, p.exponent));
  if (leader) {
    const double closing = v - leader->speed;
    const double desired_gap =
        p.min_gap + v * p.time_headway +
        v * closing / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
    const double gap = std::max(leader->gap, 1e-3);
    accel -= p.max_accel * (desired_gap / gap) * (desired_gap / gap);
  }
  return std::clamp(accel, -p.max_decel, p.max_accel);
}

LaneCoordinates RouteCoordinates(const VehicleState& state,
                                 const RoadNetwork& road) {
  return road.lane(state.lane()).Local(state.position());
}

double SteeringForRoute(const VehicleState& state, const RoadNetwork& road,
                        const SteeringGains& gains) {
  constexpr double kPi = std::numbers::pi;
  const Lane& lane = road.lane(state.lane());
  const LaneCoordinates local = lane.Local(state.position());
  const double lane_heading =
      lane.HeadingAt(std::clamp(local.longitudinal, 0.0, lane.length()));

  // Outer loop: lateral offset -> heading setpoint for the travel direction.
  const double speed = std::max(state.v, 1.0);
  const double lateral_speed = -gains.lateral * local.lateral;
  const double heading_offset =
      std::clamp(std::asin(std::clamp(lateral_speed / speed, -1.0, 1.0)),
                 -kPi / 4, kPi / 4);
  const double heading_setpoint = lane_heading + heading_offset;

  // Inner loop: heading error -> slip angle. The travel direction is
  // psi + beta, so a unit gain aligns it with the setpoint and leaves no
  // steady-state offset on arcs.
  const double beta = gains.heading * WrapAngle(heading_setpoint - state.psi);
  const double steering =
      std::atan(2.0 * std::tan(std::clamp(beta, -kPi / 3, kPi / 3)));
  return std::clamp(steering, -kSteeringMax, kSteeringMax);
}

std::vector<Vec2> PredictPositions(const VehicleState& state, double horizon,
                                   double dt) {
  const int count = static_cast<int>(std::lround(horizon / dt));
  const Vec2 velocity{state.v * std::cos(state.psi),
                      state.v * std::sin(state.psi)};
  std::vector<Vec2> points;
  points.reserve(count);
  for (int i = 1; i <= count; ++i) {
    points.push_back(state.position() + (i * dt) * velocity);
  }
  return points;
}

std::vector<Pose> PredictAlongRoute(const VehicleState& state,
                                    const RoadNetwork& road, double horizon,
                                    double dt) {
  const int count = static_cast<int>(std::lround(horizon / dt));
  const double start =
      road.lane(state.lane()).Local(state.position()).longitudinal;
  std::vector<Pose> points;
  points.reserve(count);
  for (int i = 1; i <= count; ++i) {
    double s = start + state.v * i * dt;
    std::size_t j = state.route_index;
    while (j + 1 < state.route.size() &&
           s > road.lane(state.route[j]).length()) {
      s -= road.lane(state.route[j]).length();
      ++j;
    }
    const Lane& lane = road.lane(state.route[j]);
    // On a curve the body yaw trails the travel direction by the
    // steady-state slip angle of the reference point.
    const double slip =
        std::asin(std::clamp(state.length * lane.curvature(), -1.0, 1.0));
    points.push_back(
        {lane.Position(s),
         WrapAngle(lane.HeadingAt(std::min(s, lane.length())) - slip)});
  }
  return points;
}

std::vector<Vec2> Corners(const VehicleState& state) {
  const Vec2 forward{std::cos(state.psi), std::sin(state.psi)};
  const Vec2 left{-forward.y, forward.x};
  const double hl = state.length / 2.0;
  const double hw = state.width / 2.0;
  const Vec2 c = state.position();
  return {c + hl * forward - hw * left, c + hl * forward + hw * left,
          c - hl * forward + hw * left, c - hl * forward - hw * left};
}

namespace {

// True when the projections of both polygons on `axis` are disjoint.
bool Separated(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
               Vec2 axis) {
  auto project = [axis](const std::vector<Vec2>& poly) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec2& p : poly) {
      const double d = Dot(p, axis);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = project(a);
  const auto [blo, bhi] = project(b);
  return ahi < blo || bhi < alo;
}

}  // namespace

bool CheckCollision(const VehicleState& a, const VehicleState& b) {
  const double reach =
      (Norm({a.length, a.width}) + Norm({b.length, b.width})) / 2.0;
  if (Norm(a.position() - b.position()) > reach) return false;
  const std::vector<Vec2> pa = Corners(a);
  const std::vector<Vec2> pb = Corners(b);
  for (double psi : {a.psi, b.psi}) {
    const Vec2 forward{std::cos(psi), std::sin(psi)};
    const Vec2 left{-forward.y, forward.x};
    if (Separated(pa, pb, forward) || Separated(pa, pb, left)) return false;
  }
  return true;
}

}  // namespace sim
}  // namespace egoattn
