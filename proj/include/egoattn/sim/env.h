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

#ifndef EGOATTN_SIM_ENV_H_
#define EGOATTN_SIM_ENV_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egoattn/sim/road.h"
#include "egoattn/sim/vehicle.h"

namespace egoattn {
namespace sim {

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Longitudinal meta-actions; the integer encoding is stable.
enum class EgoAction : int { kSlower = 0, kNoOp = 1, kFaster = 2 };
inline constexpr int kNumActions = 3;

// Largest number of non-ego vehicles any observation has to hold.
inline constexpr int kMaxOtherVehicles = 14;
inline constexpr VehicleId kEgoId = 0;

struct EnvConfig {
  // Traffic.
  int min_vehicles = 3;
  int max_vehicles = 12;
  bool ego_priority = false;
  Turn ego_turn = Turn::kLeft;
  double scripted_min_speed = 6.0;
  double scripted_max_speed = 9.0;
  double min_spawn_gap = 8.0;       // bumper to bumper, same lane
  double min_spawn_distance = 5.0;  // before the stop line

  // Geometry.
  double lane_width = 4.0;
  double approach_length = 60.0;
  double center_radius = 4.0;  // "reached the center" bookkeeping

  // Timing.
  double physics_dt = 1.0 / 15.0;
  int substeps = 15;  // physics steps per decision
  int horizon = 13;   // decisions per episode

  // Ego.
  double ego_start_distance = 40.0;  // before the stop line
  double ego_start_jitter = 5.0;
  double ego_initial_speed = 9.0;
  double setpoint_step = 4.5;
  double max_speed = 9.0;  // also the top setpoint
  double speed_tolerance = 0.1;
  double speed_gain = 1.0 / 0.6;
  double ego_max_accel = 6.0;

  // Yielding.
  bool yielding = true;  // off only to show what the rule prevents
  double prediction_horizon = 3.0;
  double prediction_dt = 0.25;
  double conflict_length_margin = 1.0;
  double conflict_width_margin = 1.0;
  double yield_prediction_min_speed = 4.0;  // scripted, before the stop line

  IdmParams idm;
  SteeringGains steering;

  // Throws ConfigurationError naming the offending field.
  void Validate() const;
};

// Priority rank per arm. Without ego priority the east-west road has right
// of way over the ego's north-south road.
std::array<int, 4> PriorityMap(bool ego_priority);

struct CenterEntry {
  VehicleId id = 0;
  double time = 0.0;
  friend bool operator==(const CenterEntry&, const CenterEntry&) = default;
};

struct Scene {
  VehicleState ego;
  std::vector<VehicleState> others;
  std::shared_ptr<const RoadNetwork> roads;
  std::array<int, 4> priority_map{};
  double physics_dt = 1.0 / 15.0;
  int physics_steps = 0;
  int decisions = 0;
  double ego_setpoint = 0.0;
  bool crashed = false;
  bool arrived = false;
  bool terminal = false;
  // First time each vehicle came within `center_radius` of the center.
  std::vector<CenterEntry> center_entries;

  double time() const { return physics_steps * physics_dt; }
  const VehicleState* Find(VehicleId id) const;
};

// Field-for-field equality, including the road geometry.
bool SameScene(const Scene& a, const Scene& b);

struct StepOutcome {
  Scene next_scene;
  double reward = 0.0;
  bool terminal = false;
  bool crashed = false;
  bool arrived = false;
};

struct TrajectoryRow {
  double time = 0.0;
  VehicleId vehicle_id = 0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  bool is_ego = false;
  bool braking = false;
};

struct RewardParams {
  double max_speed = 9.0;
  double speed_tolerance = 0.1;
  double collision = -5.0;
  double high_speed = 1.0;
};

double ComputeReward(bool crashed, double ego_speed,
                     const RewardParams& params = {});

// Scripted vehicles that must brake this physics step. The ego takes part
// in conflicts but is never returned; it yields only through its policy.
std::vector<VehicleId> ResolveYielding(const Scene& scene,
                                       const EnvConfig& config);

// Scripted vehicle on its inbound lane `distance` metres before the stop
// line, heading along the lane.
VehicleState MakeVehicle(const RoadNetwork& roads, VehicleId id, Arm arm,
                         Turn turn, double distance, double speed,
                         int priority_rank);

// Empty scene (ego only) with the configured ego placement and no jitter.
Scene MakeScene(const EnvConfig& config);

Scene Reset(std::uint64_t seed, const EnvConfig& config);

// Two scripted vehicles, one on each road, timed to reach the intersection
// at about the same moment; the ego waits at the far end of its approach.
Scene CrossingScenario(std::uint64_t seed, const EnvConfig& config);

// Advances one policy decision. Throws std::logic_error on terminal scenes.
// Every physics step appends one row per vehicle to `log` when given.
StepOutcome Step(const Scene& scene, EgoAction action, const EnvConfig& config,
                 std::vector<TrajectoryRow>* log = nullptr);

void WriteTrajectoryCsv(std::ostream& out,
                        const std::vector<TrajectoryRow>& rows);

}  // namespace sim
}  // namespace egoattn

#endif  // EGOATTN_SIM_ENV_H_
