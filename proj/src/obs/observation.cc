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

#include "egoattn/obs/observation.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace egoattn {
namespace obs {
namespace {

using sim::VehicleState;

double Scaled(double value, double range) {
  return std::clamp(value / range, -1.0, 1.0);
}

double DistanceSquared(const VehicleState& a, const VehicleState& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Others by increasing distance to the ego, then id.
std::vector<const VehicleState*> ByDistance(const sim::Scene& scene) {
  std::vector<const VehicleState*> order;
  order.reserve(scene.others.size());
  for (const VehicleState& v : scene.others) order.push_back(&v);
  std::sort(order.begin(), order.end(),
            [&](const VehicleState* a, const VehicleState* b) {
              return std::make_tuple(DistanceSquared(*a, scene.ego), a->id) <
                     std::make_tuple(DistanceSquared(*b, scene.ego), b->id);
            });
  return order;
}

}  // namespace

FeatureRow MakeFeatureRow(const VehicleState& vehicle, const VehicleState& ego,
                          const FeatureRanges& ranges) {
  if (!(ranges.position > 0.0) || !(ranges.speed > 0.0)) {
    throw std::invalid_argument("feature ranges must be positive");
  }
  const double c = std::cos(vehicle.psi);
  const double s = std::sin(vehicle.psi);
  return {1.0,
          Scaled(vehicle.x - ego.x, ranges.position),
          Scaled(vehicle.y - ego.y, ranges.position),
          Scaled(vehicle.v * c, ranges.speed),
          Scaled(vehicle.v * s, ranges.speed),
          c,
          s};
}

ListObservation::ListObservation(int rows, std::vector<double> values)
    : rows_(rows), values_(std::move(values)) {
  if (rows < 1 ||
      values_.size() != static_cast<std::size_t>(rows) * kFeatures) {
    throw std::invalid_argument("list observation shape mismatch");
  }
}

int ListObservation::vehicles() const {
  int count = 0;
  for (int r = 0; r < rows_; ++r) count += at(r, 0) != 0.0;
  return count;
}

ListObservation MakeListObservation(const sim::Scene& scene, bool pad,
                                    const FeatureRanges& ranges) {
  const int n = static_cast<int>(scene.others.size());
  if (pad && n > kListRows - 1) {
    throw std::invalid_argument("too many vehicles for a padded observation");
  }
  const int rows = pad ? kListRows : 1 + n;
  std::vector<double> values(static_cast<std::size_t>(rows) * kFeatures, 0.0);
  auto put = [&](int row, const FeatureRow& f) {
    std::copy(f.begin(), f.end(), values.begin() + row * kFeatures);
  };
  put(0, MakeFeatureRow(scene.ego, scene.ego, ranges));
  int row = 1;
  for (const VehicleState* v : ByDistance(scene)) {
    put(row++, MakeFeatureRow(*v, scene.ego, ranges));
  }
  return ListObservation(rows, std::move(values));
}

std::vector<sim::VehicleId> ListVehicleIds(const sim::Scene& scene) {
  std::vector<sim::VehicleId> ids = {scene.ego.id};
  for (const VehicleState* v : ByDistance(scene)) ids.push_back(v->id);
  return ids;
}

GridObservation::GridObservation(std::vector<GridCell> cells)
    : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end(),
            [](const GridCell& a, const GridCell& b) {
              return std::tie(a.i, a.j) < std::tie(b.i, b.j);
            });
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const GridCell& c = cells_[k];
    if (c.i < 0 || c.i >= kGridCells || c.j < 0 || c.j >= kGridCells) {
      throw std::invalid_argument("grid cell out of range");
    }
    if (k > 0 && c.i == cells_[k - 1].i && c.j == cells_[k - 1].j) {
      throw std::invalid_argument("duplicate grid cell");
    }
  }
}

double GridObservation::at(int i, int j, int channel) const {
  for (const GridCell& c : cells_) {
    if (c.i == i && c.j == j) return c.features[channel];
  }
  return 0.0;
}

std::vector<double> GridObservation::Dense() const {
  std::vector<double> dense(kGridCells * kGridCells * kFeatures, 0.0);
  for (const GridCell& c : cells_) {
    std::copy(c.features.begin(), c.features.end(),
              dense.begin() + (c.i * kGridCells + c.j) * kFeatures);
  }
  return dense;
}

bool GridCellOf(double dx, double dy, int* i, int* j) {
  const double half = kGridCells * kCellSize / 2.0;
  const double ci = std::floor((dx + half) / kCellSize);
  const double cj = std::floor((dy + half) / kCellSize);
  if (ci < 0 || ci >= kGridCells || cj < 0 || cj >= kGridCells) return false;
  *i = static_cast<int>(ci);
  *j = static_cast<int>(cj);
  return true;
}

GridObservation MakeGridObservation(const sim::Scene& scene,
                                    const FeatureRanges& ranges) {
  std::vector<GridCell> cells;
  auto place = [&](const VehicleState& v) {
    int i = 0;
    int j = 0;
    if (!GridCellOf(v.x - scene.ego.x, v.y - scene.ego.y, &i, &j)) return;
    // Vehicles arrive nearest first, so an occupied cell keeps its owner.
    for (const GridCell& c : cells) {
      if (c.i == i && c.j == j) return;
    }
    cells.push_back({i, j, MakeFeatureRow(v, scene.ego, ranges)});
  };
  place(scene.ego);
  for (const VehicleState* v : ByDistance(scene)) place(*v);
  return GridObservation(std::move(cells));
}

}  // namespace obs
}  // namespace egoattn
