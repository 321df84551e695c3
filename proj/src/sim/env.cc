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

#include "egoattn/sim/env.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace egoattn {
namespace sim {

void EnvConfig::Validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok)
      throw ConfigurationError(std::string("invalid env config: ") + field);
  };
  require(min_vehicles >= 0, "min_vehicles");
  require(max_vehicles >= min_vehicles, "max_vehicles");
  require(max_vehicles <= kMaxOtherVehicles, "max_vehicles");
  require(lane_width > 0.0, "lane_width");
  require(approach_length > 0.0, "approach_length");
  require(physics_dt > 0.0, "physics_dt");
  require(substeps > 0, "substeps");
  require(horizon > 0, "horizon");
  require(max_speed > 0.0, "max_speed");
  require(setpoint_step > 0.0, "setpoint_step");
  require(scripted_min_speed >= 0.0 && scripted_max_speed >= scripted_min_speed,
          "scripted speed range");
  require(prediction_horizon > 0.0 && prediction_dt > 0.0, "prediction");
  require(ego_start_distance - ego_start_jitter >= 0.0 &&
              ego_start_distance + ego_start_jitter <= approach_length,
          "ego_start_distance");
}

std::array<int, 4> PriorityMap(bool ego_priority) {
  const int ns = ego_priority ? 1 : 0;
  const int ew = ego_priority ? 0 : 1;
  // Indexed by Arm: south, east, north, west.
  return {ns, ew, ns, ew};
}

const VehicleState* Scene::Find(VehicleId id) const {
  if (ego.id == id) return &ego;
  for (const VehicleState& v : others) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

bool SameScene(const Scene& a, const Scene& b) {
  const bool same_roads =
      a.roads && b.roads && a.roads->lane_width() == b.roads->lane_width() &&
      a.roads->approach_length() == b.roads->approach_length();
  return same_roads && a.ego == b.ego && a.others == b.others &&
         a.priority_map == b.priority_map && a.physics_dt == b.physics_dt &&
         a.physics_steps == b.physics_steps && a.decisions == b.decisions &&
         a.ego_setpoint == b.ego_setpoint && a.crashed == b.crashed &&
         a.arrived == b.arrived && a.terminal == b.terminal &&
         a.center_entries == b.center_entries;
}

double ComputeReward(bool crashed, double ego_speed,
                     const RewardParams& params) {
  if (crashed) return params.collision;
  if (ego_speed >= params.max_speed - params.speed_tolerance)
    return params.high_speed;
  return 0.0;
}

VehicleState MakeVehicle(const RoadNetwork& roads, VehicleId id, Arm arm,
                         Turn turn, double distance, double speed,
                         int priority_rank) {
  VehicleState v;
  v.id = id;
  v.route = roads.Route(arm, turn);
  const Lane& lane = roads.lane(v.route.front());
  const double s = lane.length() - distance;
  const Vec2 p = lane.Position(s);
  v.x = p.x;
  v.y = p.y;
  v.psi = lane.HeadingAt(s);
  v.v = speed;
  v.priority_rank = priority_rank;
  return v;
}

namespace {

bool IsScripted(const VehicleState& v) { return v.id != kEgoId; }

// Past the stop line: on a connector or already leaving.
bool Committed(const VehicleState& v) { return v.route_index > 0; }

bool Follows(const VehicleState& a, const VehicleState& b) {
  // True when b sits on a's current or upcoming lanes (IDM territory).
  return std::find(a.route.begin() + a.route_index, a.route.end(), b.lane()) !=
         a.route.end();
}

std::optional<Leader> FindLeader(const VehicleState& follower,
                                 const Scene& scene) {
  const RoadNetwork& roads = *scene.roads;
  double offset =
      -roads.lane(follower.lane()).Local(follower.position()).longitudinal;
  double best = std::numeric_limits<double>::infinity();
  const VehicleState* leader = nullptr;
  auto consider = [&](const VehicleState& other, LaneId lane_id) {
    if (other.id == follower.id || other.lane() != lane_id) return;
    const double d =
        offset + roads.lane(lane_id).Local(other.position()).longitudinal;
    if (d > 0.0 && d < best) {
      best = d;
      leader = &other;
    }
  };
  for (std::size_t j = follower.route_index; j < follower.route.size(); ++j) {
    const LaneId lane_id = follower.route[j];
    consider(scene.ego, lane_id);
    for (const VehicleState& other : scene.others) consider(other, lane_id);
    if (leader != nullptr) break;
    offset += roads.lane(lane_id).length();
  }
  if (leader == nullptr) return std::nullopt;
  return Leader{best - (follower.length + leader->length) / 2.0, leader->v};
}

// Moves the vehicle onto the next lane of its route once it passes the end
// of the current one. Returns true when the whole route is traversed.
bool AdvanceRoute(VehicleState& v, const RoadNetwork& roads) {
  while (true) {
    const Lane& lane = roads.lane(v.lane());
    if (lane.Local(v.position()).longitudinal < lane.length()) return false;
    if (v.route_index + 1 >= static_cast<int>(v.route.size())) return true;
    ++v.route_index;
  }
}

// Prediction footprint of `v` at `pose`, inflated by the configured margins
// to absorb the sampling step.
VehicleState Ghost(const VehicleState& v, const Pose& pose,
                   const EnvConfig& config) {
  VehicleState ghost = v;
  ghost.length += config.conflict_length_margin;
  ghost.width += config.conflict_width_margin;
  ghost.x = pose.position.x;
  ghost.y = pose.position.y;
  ghost.psi = pose.heading;
  return ghost;
}

// Paths start with the current pose. Footprints overlap at a common index.
bool PredictedConflict(const VehicleState& a, const std::vector<Pose>& path_a,
                       const VehicleState& b, const std::vector<Pose>& path_b,
                       const EnvConfig& config) {
  for (std::size_t t = 1; t < path_a.size() && t < path_b.size(); ++t) {
    if (CheckCollision(Ghost(a, path_a[t], config),
                       Ghost(b, path_b[t], config))) {
      return true;
    }
  }
  return false;
}

// First index at which `a` reaches space `b` sweeps at any time.
std::size_t ArrivalIndex(const VehicleState& a, const std::vector<Pose>& path_a,
                         const VehicleState& b, const std::vector<Pose>& path_b,
                         const EnvConfig& config) {
  for (std::size_t i = 0; i < path_a.size(); ++i) {
    const VehicleState ghost_a = Ghost(a, path_a[i], config);
    for (const Pose& pose : path_b) {
      if (CheckCollision(ghost_a, Ghost(b, pose, config))) return i;
    }
  }
  return path_a.size();
}

// Distance left to the end of the connector; zero once past it.
double RemainingInBox(const VehicleState& v, const RoadNetwork& roads) {
  if (v.route_index != 1) return 0.0;
  const Lane& lane = roads.lane(v.lane());
  return std::max(0.0, lane.length() - lane.Local(v.position()).longitudinal);
}

// Member of a conflicting pair that has to give way.
const VehicleState& Yielder(const VehicleState& a,
                            const std::vector<Pose>& path_a,
                            const VehicleState& b,
                            const std::vector<Pose>& path_b,
                            const RoadNetwork& roads, const EnvConfig& config) {
  // A wreck cannot move out of the way.
  if (a.crashed != b.crashed) return a.crashed ? b : a;
  if (Committed(a) != Committed(b)) return Committed(a) ? b : a;
  if (Committed(a)) {
    // Inside the box whoever reaches the shared space first goes first; a
    // vehicle already standing in the other's way keeps its turn.
    const std::size_t ta = ArrivalIndex(a, path_a, b, path_b, config);
    const std::size_t tb = ArrivalIndex(b, path_b, a, path_a, config);
    if (ta != tb) return ta > tb ? a : b;
    const double ra = RemainingInBox(a, roads);
    const double rb = RemainingInBox(b, roads);
    if (ra != rb) return ra > rb ? a : b;
  }
  if (a.priority_rank != b.priority_rank) {
    return a.priority_rank < b.priority_rank ? a : b;
  }
  const double da = Norm(a.position());
  const double db = Norm(b.position());
  if (da != db) return da > db ? a : b;
  return a.id < b.id ? a : b;
}

void AppendLog(const Scene& scene, const std::vector<VehicleId>& braking,
               std::vector<TrajectoryRow>* log) {
  if (log == nullptr) return;
  auto row = [&](const VehicleState& v) {
    const bool brakes =
        std::find(braking.begin(), braking.end(), v.id) != braking.end();
    log->push_back(
        {scene.time(), v.id, v.x, v.y, v.v, v.psi, v.id == kEgoId, brakes});
  };
  row(scene.ego);
  for (const VehicleState& v : scene.others) row(v);
}

void PhysicsStep(Scene& scene, const EnvConfig& config,
                 std::vector<TrajectoryRow>* log) {
  const RoadNetwork& roads = *scene.roads;
  const double dt = scene.physics_dt;
  const std::vector<VehicleId> braking = ResolveYielding(scene, config);

  // Controls are computed from the pre-step scene for every vehicle.
  const double ego_accel =
      std::clamp(config.speed_gain * (scene.ego_setpoint - scene.ego.v),
                 -config.idm.max_decel, config.ego_max_accel);
  VehicleState ego =
      BicycleStep(scene.ego, ego_accel,
                  SteeringForRoute(scene.ego, roads, config.steering), dt);

  std::vector<VehicleState> others;
  others.reserve(scene.others.size());
  for (const VehicleState& v : scene.others) {
    if (v.crashed) {
      others.push_back(v);
      continue;
    }
    const bool brakes =
        std::binary_search(braking.begin(), braking.end(), v.id);
    const double accel =
        brakes ? -config.idm.max_decel
               : IdmAcceleration(v, FindLeader(v, scene), config.idm);
    VehicleState next =
        BicycleStep(v, accel, SteeringForRoute(v, roads, config.steering), dt);
    next.braking = brakes;
    others.push_back(std::move(next));
  }

  scene.arrived = AdvanceRoute(ego, roads);
  std::erase_if(others,
                [&](VehicleState& v) { return AdvanceRoute(v, roads); });

  for (VehicleState& v : others) {
    if (CheckCollision(ego, v)) {
      scene.crashed = true;
      ego.crashed = true;
      v.crashed = true;
      v.v = 0.0;
    }
  }
  for (std::size_t i = 0; i < others.size(); ++i) {
    for (std::size_t j = i + 1; j < others.size(); ++j) {
      if (others[i].crashed && others[j].crashed) continue;
      if (CheckCollision(others[i], others[j])) {
        others[i].crashed = others[j].crashed = true;
        others[i].v = others[j].v = 0.0;
      }
    }
  }

  scene.ego = std::move(ego);
  scene.others = std::move(others);
  ++scene.physics_steps;

  auto mark_center = [&](const VehicleState& v) {
    if (Norm(v.position()) > config.center_radius) return;
    for (const CenterEntry& e : scene.center_entries) {
      if (e.id == v.id) return;
    }
    scene.center_entries.push_back({v.id, scene.time()});
  };
  mark_center(scene.ego);
  for (const VehicleState& v : scene.others) mark_center(v);

  AppendLog(scene, braking, log);
}

}  // namespace

std::vector<VehicleId> ResolveYielding(const Scene& scene,
                                       const EnvConfig& config) {
  if (!config.yielding) return {};
  std::vector<const VehicleState*> vehicles;
  vehicles.reserve(scene.others.size() + 1);
  vehicles.push_back(&scene.ego);
  for (const VehicleState& v : scene.others) vehicles.push_back(&v);

  // Scripted vehicles still before the stop line are predicted at no less
  // than a floor speed, so slowing down does not hide a conflict they would
  // run into as soon as they pick up speed again.
  std::vector<std::vector<Pose>> predictions;
  predictions.reserve(vehicles.size());
  for (const VehicleState* v : vehicles) {
    VehicleState probe = *v;
    if (IsScripted(probe) && !probe.crashed && !Committed(probe)) {
      probe.v = std::max(probe.v, config.yield_prediction_min_speed);
    }
    if (probe.crashed) probe.v = 0.0;
    std::vector<Pose> path = {{probe.position(), probe.psi}};
    for (const Pose& pose :
         PredictAlongRoute(probe, *scene.roads, config.prediction_horizon,
                           config.prediction_dt)) {
      path.push_back(pose);
    }
    predictions.push_back(std::move(path));
  }

  std::vector<VehicleId> braking;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
      const VehicleState& a = *vehicles[i];
      const VehicleState& b = *vehicles[j];
      const bool a_can_brake = IsScripted(a) && !a.crashed;
      const bool b_can_brake = IsScripted(b) && !b.crashed;
      if (!a_can_brake && !b_can_brake) continue;
      if (a.lane() == b.lane() || Follows(a, b) || Follows(b, a)) continue;

      const bool conflict =
          PredictedConflict(a, predictions[i], b, predictions[j], config);
      if (!conflict) continue;
      const VehicleState& yielder =
          Yielder(a, predictions[i], b, predictions[j], *scene.roads, config);
      if (IsScripted(yielder) && !yielder.crashed)
        braking.push_back(yielder.id);
    }
  }
  std::sort(braking.begin(), braking.end());
  braking.erase(std::unique(braking.begin(), braking.end()), braking.end());
  return braking;
}

Scene MakeScene(const EnvConfig& config) {
  config.Validate();
  Scene scene;
  scene.roads =
      std::make_shared<RoadNetwork>(config.lane_width, config.approach_length);
  scene.priority_map = PriorityMap(config.ego_priority);
  scene.physics_dt = config.physics_dt;
  const double speed =
      std::clamp(config.ego_initial_speed, 0.0, config.max_speed);
  scene.ego = MakeVehicle(*scene.roads, kEgoId, Arm::kSouth, config.ego_turn,
                          config.ego_start_distance, speed,
                          scene.priority_map[static_cast<int>(Arm::kSouth)]);
  scene.ego_setpoint = speed;
  return scene;
}

Scene Reset(std::uint64_t seed, const EnvConfig& config) {
  Scene scene = MakeScene(config);
  const RoadNetwork& roads = *scene.roads;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
  };

  const double ego_distance =
      config.ego_start_distance +
      uniform(-config.ego_start_jitter, config.ego_start_jitter);
  scene.ego = MakeVehicle(roads, kEgoId, Arm::kSouth, config.ego_turn,
                          ego_distance, scene.ego.v, scene.ego.priority_rank);

  const int count = std::uniform_int_distribution<int>(
      config.min_vehicles, config.max_vehicles)(rng);
  constexpr std::array<Arm, 3> kSpawnArms = {Arm::kEast, Arm::kNorth,
                                             Arm::kWest};
  constexpr int kAttempts = 100;
  VehicleId next_id = 1;
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const Arm arm = kSpawnArms[std::uniform_int_distribution<int>(0, 2)(rng)];
      const Turn turn =
          static_cast<Turn>(std::uniform_int_distribution<int>(0, 2)(rng));
      const double distance =
          uniform(config.min_spawn_distance, config.approach_length - 2.5);
      const double speed =
          uniform(config.scripted_min_speed, config.scripted_max_speed);
      VehicleState candidate =
          MakeVehicle(roads, next_id, arm, turn, distance, speed,
                      scene.priority_map[static_cast<int>(arm)]);
      const double s =
          roads.lane(candidate.lane()).Local(candidate.position()).longitudinal;
      bool fits = !CheckCollision(candidate, scene.ego);
      for (const VehicleState& other : scene.others) {
        if (!fits) break;
        if (other.lane() == candidate.lane()) {
          const double other_s =
              roads.lane(other.lane()).Local(other.position()).longitudinal;
          fits = std::abs(other_s - s) >=
                 (other.length + candidate.length) / 2.0 + config.min_spawn_gap;
        }
        fits = fits && !CheckCollision(candidate, other);
      }
      if (fits) {
        scene.others.push_back(std::move(candidate));
        ++next_id;
        break;
      }
    }
  }
  return scene;
}

Scene CrossingScenario(std::uint64_t seed, const EnvConfig& config) {
  Scene scene = MakeScene(config);
  const RoadNetwork& roads = *scene.roads;
  scene.ego =
      MakeVehicle(roads, kEgoId, Arm::kSouth, config.ego_turn,
                  config.approach_length - 2.5, 0.0, scene.ego.priority_rank);
  scene.ego_setpoint = 0.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
  };
  auto turn = [&] {
    return static_cast<Turn>(std::uniform_int_distribution<int>(0, 2)(rng));
  };

  const Arm major = unit(rng) < 0.5 ? Arm::kEast : Arm::kWest;
  const double lo = config.min_spawn_distance;
  const double hi = config.approach_length - 10.0;
  const double major_speed =
      uniform(config.scripted_min_speed, config.scripted_max_speed);
  const double major_distance = uniform(lo, hi);
  const double minor_speed =
      uniform(config.scripted_min_speed, config.scripted_max_speed);
  // Same arrival time up to a few metres.
  const double minor_distance = std::clamp(
      major_distance * minor_speed / major_speed + uniform(-3.0, 3.0), lo, hi);
  const Turn major_turn = turn();
  const Turn minor_turn = turn();
  scene.others.push_back(
      MakeVehicle(roads, 1, major, major_turn, major_distance, major_speed,
                  scene.priority_map[static_cast<int>(major)]));
  scene.others.push_back(MakeVehicle(
      roads, 2, Arm::kNorth, minor_turn, minor_distance, minor_speed,
      scene.priority_map[static_cast<int>(Arm::kNorth)]));
  return scene;
}

StepOutcome Step(const Scene& scene, EgoAction action, const EnvConfig& config,
                 std::vector<TrajectoryRow>* log) {
  if (scene.terminal) throw std::logic_error("Step called on a terminal scene");
  StepOutcome outcome;
  Scene& next = outcome.next_scene;
  next = scene;
  switch (action) {
    case EgoAction::kSlower:
      next.ego_setpoint =
          std::max(0.0, next.ego_setpoint - config.setpoint_step);
      break;
    case EgoAction::kFaster:
      next.ego_setpoint =
          std::min(config.max_speed, next.ego_setpoint + config.setpoint_step);
      break;
    case EgoAction::kNoOp:
      break;
  }
  for (int k = 0; k < config.substeps; ++k) {
    PhysicsStep(next, config, log);
    if (next.crashed || next.arrived) break;
  }
  ++next.decisions;
  next.terminal =
      next.crashed || next.arrived || next.decisions >= config.horizon;

  outcome.reward = ComputeReward(next.crashed, next.ego.v,
                                 {config.max_speed, config.speed_tolerance});
  outcome.terminal = next.terminal;
  outcome.crashed = next.crashed;
  outcome.arrived = next.arrived;
  return outcome;
}

void WriteTrajectoryCsv(std::ostream& out,
                        const std::vector<TrajectoryRow>& rows) {
  out << "time,vehicle_id,x,y,v,psi,is_ego,braking_flag\n";
  char buffer[160];
  for (const TrajectoryRow& r : rows) {
    std::snprintf(buffer, sizeof(buffer), "%.4f,%d,%.6f,%.6f,%.6f,%.6f,%d,%d\n",
                  r.time, r.vehicle_id, r.x, r.y, r.v, r.psi, r.is_ego ? 1 : 0,
                  r.braking ? 1 : 0);
    out << buffer;
  }
}

}  // namespace sim
}  // namespace egoattn
