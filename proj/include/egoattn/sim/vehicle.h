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

#ifndef EGOATTN_SIM_VEHICLE_H_
#define EGOATTN_SIM_VEHICLE_H_

#include <numbers>
#include <optional>
#include <vector>

#include "egoattn/sim/road.h"

namespace egoattn {
namespace sim {

using VehicleId = int;

// Continuous state of one traffic participant. Velocity components are
// derived: vx = v cos(psi), vy = v sin(psi).
struct VehicleState {
  VehicleId id = 0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;    // >= 0
  double psi = 0.0;  // (-pi, pi]
  double length = 5.0;
  double width = 2.0;
  std::vector<LaneId> route;
  int route_index = 0;    // position of the current lane within `route`
  int priority_rank = 0;  // lower yields
  bool crashed = false;
  bool braking = false;

  Vec2 position() const { return {x, y}; }
  LaneId lane() const { return route.at(route_index); }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

inline constexpr double kSteeringMax = std::numbers::pi / 3.0;

// Forward-Euler step of the kinematic bicycle model. Steering is clamped to
// +-kSteeringMax; speed saturates at standstill.
VehicleState BicycleStep(const VehicleState& state, double accel,
                         double steering, double dt);

struct IdmParams {
  double desired_speed = 9.0;  // v0
  double max_accel = 3.0;      // a_max
  double comfort_decel = 5.0;  // b
  double max_decel = 9.0;      // b_max, also used for yield braking
  double exponent = 4.0;       // delta
  double time_headway = 1.5;   // T
  double min_gap = 2.0;        // s0
};

// Bumper-to-bumper gap and speed of the vehicle ahead.
struct Leader {
  double gap = 0.0;
  double speed = 0.0;
};

// Intelligent Driver Model acceleration, clamped to [-max_decel, max_accel].
double IdmAcceleration(const VehicleState& follower,
                       const std::optional<Leader>& leader,
                       const IdmParams& params = {});

struct SteeringGains {
  double lateral = 1.0;  // 1/s, lateral offset -> lateral speed
  double heading = 1.0;  // heading error -> slip angle
};

// Cascade lateral controller: the lateral offset commands a heading
// setpoint relative to the lane, the heading error commands the slip angle
// and hence the steering angle.
double SteeringForRoute(const VehicleState& state, const RoadNetwork& road,
                        const SteeringGains& gains = {});

// Constant-velocity positions at dt, 2dt, ..., horizon.
std::vector<Vec2> PredictPositions(const VehicleState& state, double horizon,
                                   double dt);

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

// Constant speed along the vehicle's route centerline at dt, 2dt, ...,
// horizon; used by the yielding logic so turning vehicles are predicted on
// their arcs. Past the end of the route the last lane is extrapolated.
// Pose headings are body yaw, which trails the path tangent on curves.
std::vector<Pose> PredictAlongRoute(const VehicleState& state,
                                    const RoadNetwork& road, double horizon,
                                    double dt);

// Oriented-rectangle overlap by separating axes.
bool CheckCollision(const VehicleState& a, const VehicleState& b);

// Rectangle corners in counter-clockwise order.
std::vector<Vec2> Corners(const VehicleState& state);

// Lane-relative position on the vehicle's current route lane.
LaneCoordinates RouteCoordinates(const VehicleState& state,
                                 const RoadNetwork& road);

}  // namespace sim
}  // namespace egoattn

#endif  // EGOATTN_SIM_VEHICLE_H_
