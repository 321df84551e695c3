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

// Scene encodings consumed by the Q-networks: a list of per-vehicle
// feature rows (padded or variable-size) and an ego-centered occupancy grid.

#ifndef EGOATTN_OBS_OBSERVATION_H_
#define EGOATTN_OBS_OBSERVATION_H_

#include <array>
#include <variant>
#include <vector>

#include "egoattn/sim/env.h"

namespace egoattn {
namespace obs {

inline constexpr int kFeatures = 7;
inline constexpr int kListRows = 1 + sim::kMaxOtherVehicles;  // 15
inline constexpr int kGridCells = 32;
inline constexpr double kCellSize = 2.0;

// presence, x, y, vx, vy, cos(psi), sin(psi)
using FeatureRow = std::array<double, kFeatures>;

struct FeatureRanges {
  double position = 100.0;  // m
  double speed = 20.0;      // m/s
};

// Position relative to the ego, velocity in the world frame; x, y, vx, vy
// are divided by their range and clipped to [-1, 1].
FeatureRow MakeFeatureRow(const sim::VehicleState& vehicle,
                          const sim::VehicleState& ego,
                          const FeatureRanges& ranges = {});

// Row 0 is the ego, the others follow by increasing distance to the ego
// (ties broken by id). Row-major, rows() x kFeatures.
class ListObservation {
 public:
  ListObservation() = default;
  ListObservation(int rows, std::vector<double> values);

  int rows() const { return rows_; }
  // Rows with presence 1.
  int vehicles() const;
  double at(int row, int feature) const {
    return values_[row * kFeatures + feature];
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const ListObservation&,
                         const ListObservation&) = default;

 private:
  int rows_ = 0;
  std::vector<double> values_;
};

// With `pad`, the result always has kListRows rows and requires at most
// kListRows - 1 other vehicles.
ListObservation MakeListObservation(const sim::Scene& scene, bool pad,
                                    const FeatureRanges& ranges = {});

// Vehicle id of each present row of the list observation, ego first.
std::vector<sim::VehicleId> ListVehicleIds(const sim::Scene& scene);

// Occupied cell of an ego-centered grid.
struct GridCell {
  int i = 0;  // east index
  int j = 0;  // north index
  FeatureRow features{};
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

// kGridCells x kGridCells x kFeatures tensor, stored sparsely: at most one
// entry per occupied cell, sorted by (i, j).
class GridObservation {
 public:
  GridObservation() = default;
  explicit GridObservation(std::vector<GridCell> cells);

  const std::vector<GridCell>& cells() const { return cells_; }
  double at(int i, int j, int channel) const;
  // Dense values, index ((i * kGridCells) + j) * kFeatures + channel.
  std::vector<double> Dense() const;

  friend bool operator==(const GridObservation&,
                         const GridObservation&) = default;

 private:
  std::vector<GridCell> cells_;
};

// Cell of a relative offset, or false when it falls outside the grid.
bool GridCellOf(double dx, double dy, int* i, int* j);

GridObservation MakeGridObservation(const sim::Scene& scene,
                                    const FeatureRanges& ranges = {});

using Observation = std::variant<ListObservation, GridObservation>;

}  // namespace obs
}  // namespace egoattn

#endif  // EGOATTN_OBS_OBSERVATION_H_
