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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace egoattn {
namespace obs {
namespace {

using sim::Scene;
using sim::VehicleState;

constexpr double kPi = std::numbers::pi;

VehicleState Vehicle(int id, double x, double y, double psi, double v) {
  VehicleState s;
  s.id = id;
  s.x = x;
  s.y = y;
  s.psi = psi;
  s.v = v;
  s.route = {0};
  return s;
}

Scene EgoAt(double x, double y) {
  Scene scene;
  scene.ego = Vehicle(0, x, y, kPi / 2, 6.0);
  return scene;
}

// Random scene with n others scattered around the ego.
Scene RandomScene(std::mt19937_64& rng, int n, double spread) {
  std::uniform_real_distribution<double> pos(-spread, spread),
      heading(-kPi, kPi), speed(0, 9);
  Scene scene = EgoAt(pos(rng), pos(rng));
  for (int k = 0; k < n; ++k) {
    scene.others.push_back(
        Vehicle(k + 1, pos(rng), pos(rng), heading(rng), speed(rng)));
  }
  return scene;
}

TEST(FeatureRowTest, EgoRow) {
  const VehicleState ego = Vehicle(0, 3, 4, kPi / 2, 6.0);
  const FeatureRow row = MakeFeatureRow(ego, ego, {100.0, 10.0});
  EXPECT_EQ(row[0], 1.0);
  EXPECT_EQ(row[1], 0.0);
  EXPECT_EQ(row[2], 0.0);
  EXPECT_NEAR(row[3], 0.0, 1e-12);
  EXPECT_NEAR(row[4], 0.6, 1e-12);
  EXPECT_NEAR(row[5], 0.0, 1e-12);
  EXPECT_NEAR(row[6], 1.0, 1e-12);
}

TEST(FeatureRowTest, VehicleTenMetresEast) {
  const VehicleState ego = Vehicle(0, 0, 0, kPi / 2, 3.0);
  const FeatureRow row =
      MakeFeatureRow(Vehicle(1, 10, 0, 0, 5), ego, {100.0, 10.0});
  const FeatureRow expected = {1, 0.1, 0, 0.5, 0, 1, 0};
  for (int k = 0; k < kFeatures; ++k)
    EXPECT_NEAR(row[k], expected[k], 1e-12) << k;
}

TEST(FeatureRowTest, FarVehicleIsClipped) {
  const VehicleState ego = Vehicle(0, 0, 0, 0, 0);
  const FeatureRow row = MakeFeatureRow(Vehicle(1, 500, -500, 0, 50), ego);
  EXPECT_EQ(row[1], 1.0);
  EXPECT_EQ(row[2], -1.0);
  EXPECT_EQ(row[3], 1.0);
}

TEST(FeatureRowTest, RejectsNonPositiveRanges) {
  const VehicleState ego = Vehicle(0, 0, 0, 0, 0);
  EXPECT_THROW(MakeFeatureRow(ego, ego, {0.0, 20.0}), std::invalid_argument);
}

TEST(ListObservationTest, EmptyScenePadded) {
  const ListObservation list = MakeListObservation(EgoAt(0, 0), true);
  ASSERT_EQ(list.rows(), 15);
  EXPECT_EQ(list.at(0, 0), 1.0);
  for (int r = 1; r < 15; ++r) {
    for (int k = 0; k < kFeatures; ++k) EXPECT_EQ(list.at(r, k), 0.0);
  }
  EXPECT_EQ(list.vehicles(), 1);
}

TEST(ListObservationTest, UnpaddedHasOneRowPerVehicle) {
  Scene scene = EgoAt(0, 0);
  for (int k = 1; k <= 3; ++k)
    scene.others.push_back(Vehicle(k, 10.0 * k, 0, 0, 1));
  const ListObservation list = MakeListObservation(scene, false);
  EXPECT_EQ(list.rows(), 4);
  EXPECT_EQ(list.values().size(), 28u);
}

TEST(ListObservationTest, PaddingOnlyAppends) {
  std::mt19937_64 rng(1);
  for (int n = 0; n <= 14; ++n) {
    const Scene scene = RandomScene(rng, n, 60);
    const ListObservation padded = MakeListObservation(scene, true);
    const ListObservation unpadded = MakeListObservation(scene, false);
    ASSERT_EQ(unpadded.rows(), n + 1);
    for (int r = 0; r <= n; ++r) {
      for (int k = 0; k < kFeatures; ++k)
        ASSERT_EQ(padded.at(r, k), unpadded.at(r, k));
    }
    EXPECT_EQ(padded.vehicles(), n + 1);
  }
}

TEST(ListObservationTest, RowsSortedByDistance) {
  Scene scene = EgoAt(0, 0);
  scene.others.push_back(Vehicle(5, 30, 0, 0, 1));
  scene.others.push_back(Vehicle(9, 0, 10, 0, 1));
  scene.others.push_back(Vehicle(2, 0, -10, 0, 1));  // ties with id 9
  const ListObservation list = MakeListObservation(scene, false);
  EXPECT_NEAR(list.at(1, 2), -0.1, 1e-12);  // id 2 first on the tie
  EXPECT_NEAR(list.at(2, 2), 0.1, 1e-12);
  EXPECT_NEAR(list.at(3, 1), 0.3, 1e-12);
}

TEST(ListObservationTest, InvariantToStorageOrder) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Scene scene = RandomScene(rng, trial % 15, 50);
    const ListObservation reference = MakeListObservation(scene, true);
    std::shuffle(scene.others.begin(), scene.others.end(), rng);
    ASSERT_EQ(MakeListObservation(scene, true), reference);
  }
}

TEST(ListObservationTest, TooManyVehiclesForPadding) {
  std::mt19937_64 rng(3);
  const Scene scene = RandomScene(rng, 15, 50);
  EXPECT_THROW(MakeListObservation(scene, true), std::invalid_argument);
  EXPECT_EQ(MakeListObservation(scene, false).rows(), 16);
}

TEST(ListObservationTest, NormalizedRowsStayBounded) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const ListObservation list =
        MakeListObservation(RandomScene(rng, 14, 300), true);
    for (int r = 0; r < list.rows(); ++r) {
      if (list.at(r, 0) == 0.0) {
        for (int k = 0; k < kFeatures; ++k) ASSERT_EQ(list.at(r, k), 0.0);
        continue;
      }
      for (int k = 1; k <= 4; ++k) ASSERT_LE(std::abs(list.at(r, k)), 1.0);
      ASSERT_NEAR(std::hypot(list.at(r, 5), list.at(r, 6)), 1.0, 1e-12);
    }
  }
}

TEST(GridCellOfTest, FloorMapping) {
  int i = -1;
  int j = -1;
  ASSERT_TRUE(GridCellOf(5.0, 0.0, &i, &j));
  EXPECT_EQ(i, 18);
  EXPECT_EQ(j, 16);
  ASSERT_TRUE(GridCellOf(-32.0, 31.999, &i, &j));
  EXPECT_EQ(i, 0);
  EXPECT_EQ(j, 31);
  EXPECT_FALSE(GridCellOf(32.0, 0.0, &i, &j));
  EXPECT_FALSE(GridCellOf(40.0, 0.0, &i, &j));
}

TEST(GridObservationTest, EmptySceneHasOnlyEgo) {
  const GridObservation grid = MakeGridObservation(EgoAt(7, -3));
  ASSERT_EQ(grid.cells().size(), 1u);
  EXPECT_EQ(grid.cells()[0].i, 16);
  EXPECT_EQ(grid.cells()[0].j, 16);
  const std::vector<double> dense = grid.Dense();
  ASSERT_EQ(dense.size(), 32u * 32u * 7u);
  double presence = 0.0;
  for (std::size_t k = 0; k < dense.size(); k += kFeatures)
    presence += dense[k];
  EXPECT_EQ(presence, 1.0);
  EXPECT_EQ(grid.at(16, 16, 0), 1.0);
}

TEST(GridObservationTest, VehicleFiveMetresEast) {
  Scene scene = EgoAt(0, 0);
  scene.others.push_back(Vehicle(1, 5, 0, 0, 4));
  const GridObservation grid = MakeGridObservation(scene);
  EXPECT_EQ(grid.at(18, 16, 0), 1.0);
  EXPECT_NEAR(grid.at(18, 16, 1), 0.05, 1e-12);
}

TEST(GridObservationTest, DistantVehicleDropped) {
  Scene scene = EgoAt(0, 0);
  scene.others.push_back(Vehicle(1, 40, 0, 0, 4));
  EXPECT_EQ(MakeGridObservation(scene).cells().size(), 1u);
}

TEST(GridObservationTest, NearestVehicleWinsSharedCell) {
  Scene scene = EgoAt(0, 0);
  scene.others.push_back(Vehicle(1, 9.9, 9.9, 0, 4));
  scene.others.push_back(Vehicle(2, 8.1, 8.1, kPi / 2, 2));
  const GridObservation grid = MakeGridObservation(scene);
  ASSERT_EQ(grid.cells().size(), 2u);
  EXPECT_NEAR(grid.at(20, 20, 1), 0.081, 1e-12);
  // The ego keeps its own cell against a vehicle right next to it.
  scene.others.push_back(Vehicle(3, 0.5, 0.5, 0, 9));
  EXPECT_EQ(MakeGridObservation(scene).at(16, 16, 3),
            MakeFeatureRow(scene.ego, scene.ego)[3]);
}

TEST(GridObservationTest, ConsistentWithFeatureRows) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Scene scene = RandomScene(rng, 14, 40);
    const GridObservation grid = MakeGridObservation(scene);
    int in_extent = 1;
    for (const VehicleState& v : scene.others) {
      int i = 0;
      int j = 0;
      if (!GridCellOf(v.x - scene.ego.x, v.y - scene.ego.y, &i, &j)) continue;
      ++in_extent;
      // Unless a nearer vehicle took the cell, the channels are its row.
      bool nearer_rival = i == 16 && j == 16;
      for (const VehicleState& w : scene.others) {
        int wi = 0;
        int wj = 0;
        if (w.id == v.id ||
            !GridCellOf(w.x - scene.ego.x, w.y - scene.ego.y, &wi, &wj)) {
          continue;
        }
        nearer_rival = nearer_rival ||
                       (wi == i && wj == j &&
                        std::hypot(w.x - scene.ego.x, w.y - scene.ego.y) <
                            std::hypot(v.x - scene.ego.x, v.y - scene.ego.y));
      }
      if (nearer_rival) continue;
      const FeatureRow row = MakeFeatureRow(v, scene.ego);
      for (int k = 0; k < kFeatures; ++k) ASSERT_EQ(grid.at(i, j, k), row[k]);
    }
    EXPECT_LE(static_cast<int>(grid.cells().size()), in_extent);
  }
}

TEST(GridObservationTest, InvariantToStorageOrder) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Scene scene = RandomScene(rng, 10, 30);
    const GridObservation reference = MakeGridObservation(scene);
    std::shuffle(scene.others.begin(), scene.others.end(), rng);
    ASSERT_EQ(MakeGridObservation(scene), reference);
  }
}

TEST(GridObservationTest, RejectsDuplicateCells) {
  GridCell a;
  a.i = 3;
  a.j = 4;
  EXPECT_THROW(GridObservation({a, a}), std::invalid_argument);
  a.i = 32;
  EXPECT_THROW(GridObservation({a}), std::invalid_argument);
}

}  // namespace
}  // namespace obs
}  // namespace egoattn
