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

#include "egoattn/nn/qmodel.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "egoattn/sim/env.h"

namespace egoattn {
namespace nn {
namespace {

using obs::GridCell;
using obs::GridObservation;
using obs::ListObservation;
using obs::Observation;

constexpr ModelKind kAllKinds[] = {ModelKind::kFcn, ModelKind::kCnn,
                                   ModelKind::kEgoAttention};

// Ego row plus n random vehicles; zero rows up to 15 when `pad`.
ListObservation RandomList(int n, bool pad, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int rows = pad ? obs::kListRows : 1 + n;
  std::vector<double> v(rows * obs::kFeatures, 0.0);
  for (int r = 0; r <= n; ++r) {
    v[r * obs::kFeatures] = 1.0;
    for (int f = 1; f < obs::kFeatures; ++f)
      v[r * obs::kFeatures + f] = dist(rng);
  }
  return ListObservation(rows, std::move(v));
}

GridObservation RandomGrid(int occupied, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_int_distribution<int> cell(0, obs::kGridCells - 1);
  std::vector<GridCell> cells;
  while (static_cast<int>(cells.size()) < occupied) {
    GridCell c{cell(rng), cell(rng), {}};
    const bool taken = std::any_of(
        cells.begin(), cells.end(),
        [&](const GridCell& o) { return o.i == c.i && o.j == c.j; });
    if (taken) continue;
    c.features[0] = 1.0;
    for (int f = 1; f < obs::kFeatures; ++f) c.features[f] = dist(rng);
    cells.push_back(c);
  }
  return GridObservation(std::move(cells));
}

Observation RandomObservation(ModelKind kind, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(0, sim::kMaxOtherVehicles);
  switch (kind) {
    case ModelKind::kFcn:
      return RandomList(n(rng), true, rng);
    case ModelKind::kCnn:
      return RandomGrid(1 + n(rng), rng);
    case ModelKind::kEgoAttention:
      return RandomList(n(rng), false, rng);
  }
  return {};
}

std::vector<const Observation*> Pointers(
    const std::vector<Observation>& items) {
  std::vector<const Observation*> out;
  for (const Observation& o : items) out.push_back(&o);
  return out;
}

TEST(ModelKindTest, NamesRoundTrip) {
  for (ModelKind k : kAllKinds) EXPECT_EQ(ParseModelKind(ModelKindName(k)), k);
  EXPECT_EQ(ModelKindName(ModelKind::kEgoAttention), "ego_attention");
  EXPECT_THROW(ParseModelKind("transformer"), std::invalid_argument);
}

TEST(ParamCountTest, Fcn) {
  EXPECT_EQ(QModel(ModelKind::kFcn, 1).ParamCount(), 30467);
}

TEST(ParamCountTest, Cnn) {
  EXPECT_EQ(QModel(ModelKind::kCnn, 1).ParamCount(), 31363);
}

TEST(ParamCountTest, EgoAttention) {
  EXPECT_EQ(QModel(ModelKind::kEgoAttention, 1).ParamCount(), 34243);
}

TEST(ParamCountTest, CombinationBiasAddsOneEmbeddingWidth) {
  Architecture arch;
  arch.combination_bias = true;
  EXPECT_EQ(QModel(ModelKind::kEgoAttention, 1, arch).ParamCount(), 34243 + 64);
}

TEST(ArchitectureTest, HeadsTimesKeySizeMustMatchEmbedding) {
  Architecture arch;
  arch.key_size = 16;
  EXPECT_THROW(QModel(ModelKind::kEgoAttention, 1, arch), UsageError);
  arch = {};
  arch.cnn_channels = {4, 4, 4, 4, 4, 4};
  EXPECT_THROW(QModel(ModelKind::kCnn, 1, arch), UsageError);
}

TEST(QModelTest, InitializationIsSeededAndBounded) {
  const QModel a(ModelKind::kEgoAttention, 42);
  const QModel b(ModelKind::kEgoAttention, 42);
  const QModel c(ModelKind::kEgoAttention, 43);
  EXPECT_TRUE(SameValues(a.params(), b.params()));
  EXPECT_FALSE(SameValues(a.params(), c.params()));
  const Tensor& w = a.params().value("decoder/dense2/weight");
  const double bound = std::sqrt(1.0 / 64.0);
  for (double x : w.data) EXPECT_LE(std::abs(x), bound);
  const Tensor& k = a.params().value("ego_encoder/dense0/bias");
  for (double x : k.data) EXPECT_LE(std::abs(x), std::sqrt(1.0 / 7.0));
}

TEST(QModelTest, EgoAttentionHandlesEveryVehicleCount) {
  std::mt19937_64 rng(1);
  const QModel model(ModelKind::kEgoAttention, 3);
  for (int n = 0; n <= sim::kMaxOtherVehicles; ++n) {
    const QOutput out = model.QValues(RandomList(n, false, rng));
    for (double q : out.values) EXPECT_TRUE(std::isfinite(q)) << n;
    ASSERT_TRUE(out.trace.has_value());
    ASSERT_EQ(out.trace->heads.size(), 2u);
    for (const auto& head : out.trace->heads) {
      ASSERT_EQ(static_cast<int>(head.size()), 1 + n);
      double sum = 0.0;
      for (double w : head) {
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0);
        sum += w;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(QModelTest, TraceOnlyForEgoAttention) {
  std::mt19937_64 rng(2);
  EXPECT_FALSE(QModel(ModelKind::kFcn, 1)
                   .QValues(RandomList(3, true, rng))
                   .trace.has_value());
  EXPECT_FALSE(
      QModel(ModelKind::kCnn, 1).QValues(RandomGrid(3, rng)).trace.has_value());
}

TEST(QModelTest, FcnIgnoresHowZeroRowsAreStored) {
  std::mt19937_64 rng(3);
  const ListObservation padded = RandomList(4, true, rng);
  const ListObservation short_list(
      5, std::vector<double>(padded.values().begin(),
                             padded.values().begin() + 35));
  const QModel model(ModelKind::kFcn, 5);
  EXPECT_EQ(model.QValues(padded).values, model.QValues(short_list).values);
}

TEST(QModelTest, WrongObservationKindIsUsageError) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(QModel(ModelKind::kCnn, 1).QValues(RandomList(2, true, rng)),
               UsageError);
  EXPECT_THROW(QModel(ModelKind::kFcn, 1).QValues(RandomGrid(2, rng)),
               UsageError);
  EXPECT_THROW(QModel(ModelKind::kEgoAttention, 1).QValues(RandomGrid(2, rng)),
               UsageError);
}

TEST(QModelTest, NonFiniteParameterOrInputIsNumericalError) {
  std::mt19937_64 rng(5);
  for (ModelKind kind : kAllKinds) {
    QModel model(kind, 1);
    const Observation o = RandomObservation(kind, rng);
    model.params().value(model.params().names()[0]).data[0] =
        std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(model.QValues(o), NumericalError) << ModelKindName(kind);
    EXPECT_THROW(model.Forward(MakeBatch(kind, {&o})), NumericalError);
  }
  std::vector<double> v(obs::kListRows * obs::kFeatures, 0.0);
  v[0] = 1.0;
  v[3] = std::numeric_limits<double>::infinity();
  const Observation bad = ListObservation(obs::kListRows, v);
  EXPECT_THROW(QModel(ModelKind::kFcn, 1).QValues(bad), NumericalError);
}

TEST(QModelTest, PermutingOtherVehiclesPermutesOnlyTheWeights) {
  std::mt19937_64 rng(6);
  const QModel model(ModelKind::kEgoAttention, 7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 13;
    const ListObservation list = RandomList(n, false, rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> v(list.values().begin(),
                          list.values().begin() + obs::kFeatures);
    for (int r : perm) {
      v.insert(v.end(), list.values().begin() + r * obs::kFeatures,
               list.values().begin() + (r + 1) * obs::kFeatures);
    }
    const QOutput a = model.QValues(list);
    const QOutput b = model.QValues(ListObservation(1 + n, v));
    for (int k = 0; k < kNumOutputs; ++k) {
      EXPECT_NEAR(a.values[k], b.values[k],
                  1e-5 * std::max(1.0, std::abs(a.values[k])));
    }
    EXPECT_EQ(
        std::max_element(a.values.begin(), a.values.end()) - a.values.begin(),
        std::max_element(b.values.begin(), b.values.end()) - b.values.begin());
    for (int h = 0; h < 2; ++h) {
      EXPECT_NEAR(a.trace->heads[h][0], b.trace->heads[h][0], 1e-12);
      for (int k = 0; k < n; ++k) {
        EXPECT_NEAR(b.trace->heads[h][1 + k], a.trace->heads[h][perm[k]],
                    1e-12);
      }
    }
  }
}

TEST(BatchForwardTest, SingleUnpaddedItemEqualsReferenceExactly) {
  std::mt19937_64 rng(8);
  const QModel model(ModelKind::kEgoAttention, 9);
  for (int n : {0, 3, 14}) {
    const Observation o = RandomList(n, false, rng);
    std::vector<AttentionTrace> traces;
    const Matrix q = model.Forward(MakeBatch(ModelKind::kEgoAttention, {&o}),
                                   nullptr, &traces);
    const QOutput ref = model.QValues(o);
    for (int k = 0; k < kNumOutputs; ++k)
      EXPECT_EQ(q(0, k), ref.values[k]) << n;
    EXPECT_EQ(traces[0].heads, ref.trace->heads);
  }
}

TEST(BatchForwardTest, PaddedEmptySceneEqualsUnpadded) {
  std::mt19937_64 rng(10);
  const QModel model(ModelKind::kEgoAttention, 11);
  const ListObservation padded = RandomList(0, true, rng);
  const Observation unpadded =
      ListObservation(1, std::vector<double>(padded.values().begin(),
                                             padded.values().begin() + 7));
  const Observation p = padded;
  const Matrix a = model.Forward(MakeBatch(ModelKind::kEgoAttention, {&p}));
  const Matrix b =
      model.Forward(MakeBatch(ModelKind::kEgoAttention, {&unpadded}));
  for (int k = 0; k < kNumOutputs; ++k) {
    EXPECT_NEAR(a(0, k), b(0, k), 1e-5 * std::max(1.0, std::abs(b(0, k))));
  }
}

// The batched kernels (im2col, masked attention) against the single-item
// reference operators.
TEST(BatchForwardTest, MatchesLoopedReferenceForEveryModel) {
  std::mt19937_64 rng(12);
  for (ModelKind kind : kAllKinds) {
    const QModel model(kind, 13);
    std::vector<Observation> items;
    for (int b = 0; b < 8; ++b) items.push_back(RandomObservation(kind, rng));
    std::vector<AttentionTrace> traces;
    const Matrix q =
        model.Forward(MakeBatch(kind, Pointers(items)), nullptr, &traces);
    ASSERT_EQ(q.rows(), 8);
    for (int b = 0; b < 8; ++b) {
      const QOutput ref = model.QValues(items[b]);
      for (int k = 0; k < kNumOutputs; ++k) {
        EXPECT_NEAR(q(b, k), ref.values[k],
                    1e-5 * std::max(1.0, std::abs(ref.values[k])))
            << ModelKindName(kind);
      }
      if (kind != ModelKind::kEgoAttention) continue;
      for (int h = 0; h < 2; ++h) {
        const auto& full = traces[b].heads[h];
        const auto& short_trace = ref.trace->heads[h];
        for (std::size_t r = 0; r < full.size(); ++r) {
          EXPECT_NEAR(full[r], r < short_trace.size() ? short_trace[r] : 0.0,
                      1e-9);
        }
      }
    }
  }
}

TEST(BatchForwardTest, WrongBatchShapeIsUsageError) {
  const QModel model(ModelKind::kEgoAttention, 1);
  Batch batch;
  batch.kind = ModelKind::kEgoAttention;
  batch.size = 2;
  batch.rows = 3;
  batch.inputs = Matrix::Zero(6, 7);
  batch.mask = Matrix::Ones(2, 3);
  EXPECT_NO_THROW(model.Forward(batch));
  batch.mask(1, 0) = 0.0;
  EXPECT_THROW(model.Forward(batch), UsageError);
  batch.mask = Matrix::Ones(2, 2);
  EXPECT_THROW(model.Forward(batch), UsageError);
  batch.kind = ModelKind::kFcn;
  EXPECT_THROW(model.Forward(batch), UsageError);
}

TEST(BackwardTest, WithoutForwardIsUsageError) {
  QModel model(ModelKind::kFcn, 1);
  EXPECT_THROW(model.Backward(Tape(), Matrix::Ones(1, 3)), UsageError);
}

TEST(BackwardTest, OutputGradientShapeIsChecked) {
  std::mt19937_64 rng(14);
  QModel model(ModelKind::kFcn, 1);
  const Observation o = RandomObservation(ModelKind::kFcn, rng);
  Tape tape;
  model.Forward(MakeBatch(ModelKind::kFcn, {&o}), &tape);
  EXPECT_THROW(model.Backward(tape, Matrix::Ones(2, 3)), UsageError);
}

TEST(BackwardTest, FirstOutputGradientReachesFinalBias) {
  std::mt19937_64 rng(15);
  for (ModelKind kind : kAllKinds) {
    QModel model(kind, 2);
    const Observation o = RandomObservation(kind, rng);
    Tape tape;
    model.Forward(MakeBatch(kind, {&o}), &tape);
    Matrix d = Matrix::Zero(1, 3);
    d(0, 0) = 1.0;
    model.Backward(tape, d);
    const std::string bias = model.params().names().back();
    EXPECT_EQ(model.params().grad(bias).data,
              (std::vector<double>{1.0, 0.0, 0.0}))
        << ModelKindName(kind);
  }
}

TEST(BackwardTest, ZeroUpstreamGradientGivesZeroGradients) {
  std::mt19937_64 rng(16);
  for (ModelKind kind : kAllKinds) {
    QModel model(kind, 3);
    std::vector<Observation> items = {RandomObservation(kind, rng),
                                      RandomObservation(kind, rng)};
    Tape tape;
    model.Forward(MakeBatch(kind, Pointers(items)), &tape);
    model.Backward(tape, Matrix::Zero(2, 3));
    for (const std::string& name : model.params().names()) {
      for (double g : model.params().grad(name).data) ASSERT_EQ(g, 0.0) << name;
    }
  }
}

TEST(BackwardTest, GradientsAccumulateAcrossCalls) {
  std::mt19937_64 rng(17);
  QModel model(ModelKind::kEgoAttention, 4);
  const Observation o = RandomObservation(ModelKind::kEgoAttention, rng);
  Tape tape;
  model.Forward(MakeBatch(ModelKind::kEgoAttention, {&o}), &tape);
  model.Backward(tape, Matrix::Ones(1, 3));
  const std::vector<double> once =
      model.params().grad("attention0/head0/key").data;
  model.Backward(tape, Matrix::Ones(1, 3));
  const std::vector<double>& twice =
      model.params().grad("attention0/head0/key").data;
  for (std::size_t i = 0; i < once.size(); ++i)
    EXPECT_DOUBLE_EQ(twice[i], 2.0 * once[i]);
}

// Loss = sum of Q weighted by fixed random coefficients, so d(loss)/dQ is
// the coefficient matrix. Central differences with h = 1e-4 on 100 random
// scalars; relative error |a - n| / max(|a|, |n|, 1e-6) < 1e-3.
void CheckGradients(ModelKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  QModel model(kind, seed);
  std::vector<Observation> items;
  for (int b = 0; b < 3; ++b) items.push_back(RandomObservation(kind, rng));
  const Batch batch = MakeBatch(kind, Pointers(items));
  std::normal_distribution<double> normal;
  Matrix coeff(3, kNumOutputs);
  for (int i = 0; i < coeff.size(); ++i) coeff.data()[i] = normal(rng);
  const auto loss = [&]() {
    return (model.Forward(batch).array() * coeff.array()).sum();
  };

  model.params().ZeroGrad();
  Tape tape;
  model.Forward(batch, &tape);
  model.Backward(tape, coeff);

  std::vector<std::pair<std::string, int>> scalars;
  for (const std::string& name : model.params().names()) {
    for (int i = 0; i < model.params().value(name).size(); ++i)
      scalars.emplace_back(name, i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, scalars.size() - 1);
  const double h = 1e-4;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& [name, i] = scalars[pick(rng)];
    double& w = model.params().value(name).data[i];
    const double saved = w;
    w = saved + h;
    const double up = loss();
    w = saved - h;
    const double down = loss();
    w = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = model.params().grad(name).data[i];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-3)
        << ModelKindName(kind) << " " << name << "[" << i << "] analytic "
        << analytic << " numeric " << numeric;
  }
}

TEST(GradientCheckTest, Fcn) { CheckGradients(ModelKind::kFcn, 21); }
TEST(GradientCheckTest, Cnn) { CheckGradients(ModelKind::kCnn, 22); }
TEST(GradientCheckTest, EgoAttention) {
  CheckGradients(ModelKind::kEgoAttention, 23);
}

TEST(GradientCheckTest, StackedAttentionLayers) {
  Architecture arch;
  arch.attention_layers = 2;
  arch.combination_bias = true;
  std::mt19937_64 rng(24);
  QModel model(ModelKind::kEgoAttention, 24, arch);
  std::vector<Observation> items = {RandomList(5, false, rng),
                                    RandomList(1, false, rng)};
  const Batch batch = MakeBatch(ModelKind::kEgoAttention, Pointers(items));
  Tape tape;
  model.Forward(batch, &tape);
  model.Backward(tape, Matrix::Ones(2, 3));
  const double h = 1e-4;
  for (const std::string name :
       {"attention0/head1/query", "attention0/combination/bias",
        "attention1/head0/value", "others_encoder/dense0/weight"}) {
    for (int i = 0; i < 5; ++i) {
      double& w = model.params().value(name).data[i];
      const double saved = w;
      w = saved + h;
      const double up = model.Forward(batch).sum();
      w = saved - h;
      const double down = model.Forward(batch).sum();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = model.params().grad(name).data[i];
      EXPECT_LT(std::abs(analytic - numeric) /
                    std::max({std::abs(analytic), std::abs(numeric), 1e-6}),
                1e-3)
          << name << "[" << i << "]";
    }
  }
}

TEST(QModelTest, RealSceneObservations) {
  sim::EnvConfig config;
  const QModel attention(ModelKind::kEgoAttention, 1);
  const QModel cnn(ModelKind::kCnn, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const sim::Scene scene = sim::Reset(seed, config);
    const QOutput a = attention.QValues(obs::MakeListObservation(scene, false));
    EXPECT_EQ(a.trace->heads[0].size(), 1 + scene.others.size());
    const QOutput c = cnn.QValues(obs::MakeGridObservation(scene));
    for (double q : c.values) EXPECT_TRUE(std::isfinite(q));
  }
}

}  // namespace
}  // namespace nn
}  // namespace egoattn
