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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace egoattn {
namespace nn {
namespace {

constexpr int kListInputs = obs::kListRows * obs::kFeatures;
constexpr int kGridInputs = obs::kGridCells * obs::kGridCells * obs::kFeatures;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix ToMatrix(const Tensor& t) { return t.AsMatrix(); }

RowVector ToRow(const Tensor& t) {
  return Eigen::Map<const RowVector>(t.data.data(),
                                     static_cast<Eigen::Index>(t.data.size()));
}

void AddTo(Tensor& t, const Matrix& m) {
  MatrixMap view = t.AsMatrix();
  if (view.rows() * view.cols() != m.rows() * m.cols()) {
    throw UsageError("gradient shape mismatch");
  }
  Eigen::Map<Matrix>(t.data.data(), m.rows(), m.cols()) += m;
}

void ReluMask(Matrix& dy, const Matrix& activation) {
  dy = (activation.array() > 0.0).select(dy, 0.0);
}

// Batched 2x2/stride-2 patches. Input rows are items laid out H x W x C;
// output row (b, oi, oj) holds the patch in (di, dj, c) order, matching a
// {2, 2, C, O} kernel viewed as (4C) x O.
Matrix Im2Col(const Matrix& x, int h, int w, int c) {
  const int oh = h / 2;
  const int ow = w / 2;
  Matrix out(x.rows() * oh * ow, 4 * c);
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const double* src = x.row(b).data();
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        double* dst = out.row((b * oh + oi) * ow + oj).data();
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            std::copy_n(src + ((2 * oi + di) * w + 2 * oj + dj) * c, c,
                        dst + (di * 2 + dj) * c);
          }
        }
      }
    }
  }
  return out;
}

Matrix Col2Im(const Matrix& patches, int batch, int h, int w, int c) {
  const int oh = h / 2;
  const int ow = w / 2;
  Matrix out = Matrix::Zero(batch, h * w * c);
  for (int b = 0; b < batch; ++b) {
    double* dst = out.row(b).data();
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        const double* src = patches.row((b * oh + oi) * ow + oj).data();
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            // Patches do not overlap, so plain copies suffice.
            std::copy_n(src + (di * 2 + dj) * c, c,
                        dst + ((2 * oi + di) * w + 2 * oj + dj) * c);
          }
        }
      }
    }
  }
  return out;
}

// Reinterprets a matrix's row-major storage with a new row count.
Matrix Reshape(const Matrix& m, Eigen::Index rows) {
  return Eigen::Map<const Matrix>(m.data(), rows, m.size() / rows);
}

}  // namespace

std::string ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFcn:
      return "fcn_list";
    case ModelKind::kCnn:
      return "cnn_grid";
    case ModelKind::kEgoAttention:
      return "ego_attention";
  }
  return "";
}

ModelKind ParseModelKind(const std::string& name) {
  for (ModelKind k :
       {ModelKind::kFcn, ModelKind::kCnn, ModelKind::kEgoAttention}) {
    if (ModelKindName(k) == name) return k;
  }
  throw std::invalid_argument(
      "unknown agent '" + name +
      "' (expected fcn_list, cnn_grid or ego_attention)");
}

void Architecture::Validate(ModelKind kind) const {
  const auto positive = [](const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x > 0; });
  };
  switch (kind) {
    case ModelKind::kFcn:
      if (!positive(fcn_hidden))
        throw UsageError("fcn hidden sizes must be positive");
      break;
    case ModelKind::kCnn: {
      if (cnn_channels.empty() || !positive(cnn_channels) || cnn_hidden <= 0) {
        throw UsageError("cnn sizes must be positive");
      }
      int side = obs::kGridCells;
      for (std::size_t k = 0; k < cnn_channels.size(); ++k) {
        if (side % 2 != 0) throw UsageError("cnn has too many stride-2 layers");
        side /= 2;
      }
      break;
    }
    case ModelKind::kEgoAttention:
      if (encoder.empty() || !positive(encoder) || !positive(decoder)) {
        throw UsageError("encoder and decoder sizes must be positive");
      }
      if (heads <= 0 || key_size <= 0 || attention_layers <= 0) {
        throw UsageError("attention sizes must be positive");
      }
      if (heads * key_size != encoder.back()) {
        throw UsageError("heads * key_size must equal the embedding size");
      }
      break;
  }
}

Batch MakeBatch(ModelKind kind,
                const std::vector<const obs::Observation*>& items) {
  Batch batch;
  batch.kind = kind;
  batch.size = static_cast<int>(items.size());
  const auto list_of =
      [](const obs::Observation* o) -> const obs::ListObservation& {
    const auto* list = std::get_if<obs::ListObservation>(o);
    if (list == nullptr) throw UsageError("model expects a list observation");
    if (list->rows() > obs::kListRows)
      throw UsageError("list has too many rows");
    return *list;
  };
  switch (kind) {
    case ModelKind::kFcn:
      batch.inputs = Matrix::Zero(batch.size, kListInputs);
      for (int b = 0; b < batch.size; ++b) {
        const auto& v = list_of(items[b]).values();
        std::copy(v.begin(), v.end(), batch.inputs.row(b).data());
      }
      break;
    case ModelKind::kCnn:
      batch.inputs = Matrix::Zero(batch.size, kGridInputs);
      for (int b = 0; b < batch.size; ++b) {
        const auto* grid = std::get_if<obs::GridObservation>(items[b]);
        if (grid == nullptr)
          throw UsageError("model expects a grid observation");
        for (const obs::GridCell& cell : grid->cells()) {
          std::copy(cell.features.begin(), cell.features.end(),
                    batch.inputs.row(b).data() +
                        (cell.i * obs::kGridCells + cell.j) * obs::kFeatures);
        }
      }
      break;
    case ModelKind::kEgoAttention:
      // Items are padded to the longest one; masked rows get zero weight.
      batch.rows = 1;
      for (const obs::Observation* o : items)
        batch.rows = std::max(batch.rows, list_of(o).rows());
      batch.inputs = Matrix::Zero(batch.size * batch.rows, obs::kFeatures);
      batch.mask = Matrix::Zero(batch.size, batch.rows);
      for (int b = 0; b < batch.size; ++b) {
        const auto& list = list_of(items[b]);
        const auto& v = list.values();
        std::copy(v.begin(), v.end(), batch.inputs.row(b * batch.rows).data());
        for (int r = 0; r < list.rows(); ++r) {
          batch.mask(b, r) = list.at(r, 0) > 0.5 ? 1.0 : 0.0;
        }
        batch.mask(b, 0) = 1.0;  // the ego always attends to itself
      }
      break;
  }
  return batch;
}

QModel::QModel(ModelKind kind, std::uint64_t seed, const Architecture& arch)
    : kind_(kind), arch_(arch) {
  arch_.Validate(kind);
  switch (kind) {
    case ModelKind::kFcn: {
      std::vector<int> sizes = arch_.fcn_hidden;
      sizes.push_back(kNumOutputs);
      mlp_ = AddMlp("fcn", kListInputs, sizes);
      break;
    }
    case ModelKind::kCnn: {
      int in = obs::kFeatures;
      int side = obs::kGridCells;
      for (std::size_t k = 0; k < arch_.cnn_channels.size(); ++k) {
        const std::string prefix = "cnn/conv" + std::to_string(k);
        const int out = arch_.cnn_channels[k];
        params_.Add(prefix + "/kernel", {2, 2, in, out});
        params_.Add(prefix + "/bias", {out});
        convs_.push_back({prefix + "/kernel", prefix + "/bias", in, out});
        in = out;
        side /= 2;
      }
      mlp_ = AddMlp("cnn", side * side * in, {arch_.cnn_hidden, kNumOutputs});
      break;
    }
    case ModelKind::kEgoAttention: {
      ego_encoder_ = AddMlp("ego_encoder", obs::kFeatures, arch_.encoder);
      others_encoder_ = AddMlp("others_encoder", obs::kFeatures, arch_.encoder);
      const int dx = arch_.encoder.back();
      for (int l = 0; l < arch_.attention_layers; ++l) {
        const std::string prefix = "attention" + std::to_string(l);
        AttentionLayer layer;
        for (int h = 0; h < arch_.heads; ++h) {
          const std::string head = prefix + "/head" + std::to_string(h);
          std::array<std::string, 3> names = {head + "/query", head + "/key",
                                              head + "/value"};
          for (const std::string& n : names)
            params_.Add(n, {dx, arch_.key_size});
          layer.heads.push_back(names);
        }
        layer.combination.weight = prefix + "/combination/weight";
        params_.Add(layer.combination.weight,
                    {arch_.heads * arch_.key_size, dx});
        if (arch_.combination_bias) {
          layer.combination.bias = prefix + "/combination/bias";
          params_.Add(layer.combination.bias, {dx});
        }
        attention_.push_back(std::move(layer));
      }
      std::vector<int> sizes = arch_.decoder;
      sizes.push_back(kNumOutputs);
      mlp_ = AddMlp("decoder", dx, sizes);
      break;
    }
  }
  Initialize(seed);
}

std::vector<QModel::Dense> QModel::AddMlp(const std::string& prefix, int in,
                                          const std::vector<int>& sizes,
                                          bool bias) {
  std::vector<Dense> layers;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::string name = prefix + "/dense" + std::to_string(k);
    Dense d{name + "/weight", bias ? name + "/bias" : ""};
    params_.Add(d.weight, {in, sizes[k]});
    if (bias) params_.Add(d.bias, {sizes[k]});
    layers.push_back(d);
    in = sizes[k];
  }
  return layers;
}

// Every tensor, weights and biases alike, is drawn from U(-a, a) with
// a = sqrt(1 / fan_in), fan_in being the input width of its layer.
void QModel::Initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, int> fan_in;
  const auto dense_fan = [&](const std::vector<Dense>& layers) {
    for (const Dense& d : layers) {
      const int in = params_.value(d.weight).shape[0];
      fan_in[d.weight] = in;
      if (!d.bias.empty()) fan_in[d.bias] = in;
    }
  };
  dense_fan(mlp_);
  dense_fan(ego_encoder_);
  dense_fan(others_encoder_);
  for (const Conv& c : convs_) {
    fan_in[c.kernel] = 4 * c.in_channels;
    fan_in[c.bias] = 4 * c.in_channels;
  }
  for (const AttentionLayer& layer : attention_) {
    for (const auto& head : layer.heads) {
      for (const std::string& n : head) fan_in[n] = params_.value(n).shape[0];
    }
    dense_fan({layer.combination});
  }
  for (const std::string& name : params_.names()) {
    const double a = std::sqrt(1.0 / fan_in.at(name));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& x : params_.value(name).data) x = dist(rng);
  }
}

void QModel::CheckFinite(const Matrix& inputs) const {
  if (!inputs.allFinite()) throw NumericalError("non-finite model input");
  if (!params_.AllFinite()) throw NumericalError("non-finite model parameter");
}

Matrix QModel::DenseForward(const Dense& layer, const Matrix& x) const {
  const Tensor& w = params_.value(layer.weight);
  if (x.cols() != w.shape[0]) throw UsageError("dense input width mismatch");
  Matrix y = x * w.AsMatrix();
  if (!layer.bias.empty()) {
    y.rowwise() += Eigen::Map<const RowVector>(
        params_.value(layer.bias).data.data(), y.cols());
  }
  return y;
}

Matrix QModel::DenseBackward(const Dense& layer, const Matrix& x,
                             const Matrix& dy) {
  AddTo(params_.grad(layer.weight), x.transpose() * dy);
  if (!layer.bias.empty()) AddTo(params_.grad(layer.bias), dy.colwise().sum());
  return dy * params_.value(layer.weight).AsMatrix().transpose();
}

Matrix QModel::MlpForward(const std::vector<Dense>& layers, const Matrix& x,
                          bool relu_last, std::vector<Matrix>* saved) const {
  Matrix h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (saved != nullptr) saved->push_back(h);
    h = DenseForward(layers[k], h);
    if (k + 1 < layers.size() || relu_last) ReluInPlace(h);
  }
  if (saved != nullptr) saved->push_back(h);
  return h;
}

Matrix QModel::MlpBackward(const std::vector<Dense>& layers,
                           const std::vector<Matrix>& saved, Matrix dy,
                           bool relu_last) {
  const std::size_t n = layers.size();
  if (relu_last) ReluMask(dy, saved[n]);
  for (std::size_t k = n; k-- > 0;) {
    Matrix dx = DenseBackward(layers[k], saved[k], dy);
    if (k == 0) return dx;
    ReluMask(dx, saved[k]);
    dy = std::move(dx);
  }
  return dy;
}

Matrix QModel::MlpReference(const std::vector<Dense>& layers, Matrix x,
                            bool relu_last) const {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    RowVector bias;
    if (!layers[k].bias.empty()) bias = ToRow(params_.value(layers[k].bias));
    x = Affine(x, ToMatrix(params_.value(layers[k].weight)), bias);
    if (k + 1 < layers.size() || relu_last) ReluInPlace(x);
  }
  return x;
}

QOutput QModel::QValues(const obs::Observation& observation) const {
  QOutput out;
  Matrix q;
  switch (kind_) {
    case ModelKind::kFcn: {
      Batch batch = MakeBatch(kind_, {&observation});
      CheckFinite(batch.inputs);
      q = MlpReference(mlp_, batch.inputs, false);
      break;
    }
    case ModelKind::kCnn: {
      const auto* grid = std::get_if<obs::GridObservation>(&observation);
      if (grid == nullptr) throw UsageError("model expects a grid observation");
      Tensor x({obs::kGridCells, obs::kGridCells, obs::kFeatures},
               grid->Dense());
      CheckFinite(x.AsMatrix());
      for (const Conv& c : convs_) {
        x = Conv2d(x, params_.value(c.kernel), params_.value(c.bias));
        for (double& v : x.data) v = std::max(v, 0.0);
      }
      Matrix flat = Eigen::Map<const Matrix>(x.data.data(), 1, x.size());
      q = MlpReference(mlp_, flat, false);
      break;
    }
    case ModelKind::kEgoAttention: {
      const auto* list = std::get_if<obs::ListObservation>(&observation);
      if (list == nullptr) throw UsageError("model expects a list observation");
      if (list->rows() < 1) throw UsageError("list has no ego row");
      // Padding rows carry presence 0 and are dropped, which is what the
      // mask does in the batched path.
      std::vector<int> present = {0};
      for (int r = 1; r < list->rows(); ++r) {
        if (list->at(r, 0) > 0.5) present.push_back(r);
      }
      Matrix x(static_cast<Eigen::Index>(present.size()), obs::kFeatures);
      for (std::size_t k = 0; k < present.size(); ++k) {
        for (int f = 0; f < obs::kFeatures; ++f)
          x(k, f) = list->at(present[k], f);
      }
      CheckFinite(x);
      Matrix embeddings = MlpReference(others_encoder_, x, true);
      embeddings.row(0) = MlpReference(ego_encoder_, x.topRows(1), true);
      AttentionTrace trace;
      for (const AttentionLayer& layer : attention_) {
        AttentionWeights w;
        for (const auto& head : layer.heads) {
          w.heads.push_back({ToMatrix(params_.value(head[0])),
                             ToMatrix(params_.value(head[1])),
                             ToMatrix(params_.value(head[2]))});
        }
        w.combination = ToMatrix(params_.value(layer.combination.weight));
        if (!layer.combination.bias.empty()) {
          w.combination_bias = ToRow(params_.value(layer.combination.bias));
        }
        EgoAttentionResult r = EgoAttentionForward(embeddings, w);
        embeddings.row(0) = r.ego_feature;
        trace = std::move(r.trace);  // the last layer's weights
      }
      q = MlpReference(mlp_, embeddings.topRows(1), false);
      out.trace = std::move(trace);
      break;
    }
  }
  if (!q.allFinite()) throw NumericalError("non-finite Q-value");
  for (int a = 0; a < kNumOutputs; ++a) out.values[a] = q(0, a);
  return out;
}

Matrix QModel::Forward(const Batch& batch, Tape* tape,
                       std::vector<AttentionTrace>* traces) const {
  if (batch.kind != kind_)
    throw UsageError("batch was built for another model");
  if (tape != nullptr) *tape = Tape();
  Matrix q;
  switch (kind_) {
    case ModelKind::kFcn:
      q = ForwardFcn(batch, tape);
      break;
    case ModelKind::kCnn:
      q = ForwardCnn(batch, tape);
      break;
    case ModelKind::kEgoAttention:
      q = ForwardEgoAttention(batch, tape, traces);
      break;
  }
  if (!q.allFinite()) throw NumericalError("non-finite Q-value");
  if (tape != nullptr) {
    tape->recorded_ = true;
    tape->kind_ = kind_;
    tape->size_ = batch.size;
    tape->rows_ = batch.rows;
  }
  return q;
}

void QModel::Backward(const Tape& tape, const Matrix& grad_output) {
  if (!tape.recorded())
    throw UsageError("backward without a recorded forward pass");
  if (tape.kind_ != kind_)
    throw UsageError("tape was recorded by another model");
  if (grad_output.rows() != tape.size_ || grad_output.cols() != kNumOutputs) {
    throw UsageError("output gradient has the wrong shape");
  }
  switch (kind_) {
    case ModelKind::kFcn:
      BackwardFcn(tape, grad_output);
      break;
    case ModelKind::kCnn:
      BackwardCnn(tape, grad_output);
      break;
    case ModelKind::kEgoAttention:
      BackwardEgoAttention(tape, grad_output);
      break;
  }
}

Matrix QModel::ForwardFcn(const Batch& batch, Tape* tape) const {
  if (batch.inputs.rows() != batch.size || batch.inputs.cols() != kListInputs) {
    throw UsageError("fcn batch must be size x 105");
  }
  CheckFinite(batch.inputs);
  return MlpForward(mlp_, batch.inputs, false, tape ? &tape->saved_ : nullptr);
}

void QModel::BackwardFcn(const Tape& tape, const Matrix& grad_output) {
  MlpBackward(mlp_, tape.saved_, grad_output, false);
}

// Tape layout: per conv layer the patches and the activation, then the head.
Matrix QModel::ForwardCnn(const Batch& batch, Tape* tape) const {
  if (batch.inputs.rows() != batch.size || batch.inputs.cols() != kGridInputs) {
    throw UsageError("cnn batch must be size x 7168");
  }
  CheckFinite(batch.inputs);
  Matrix x = batch.inputs;
  int side = obs::kGridCells;
  for (const Conv& c : convs_) {
    Matrix patches = Im2Col(x, side, side, c.in_channels);
    Matrix y = patches * params_.value(c.kernel).AsMatrix();
    y.rowwise() += Eigen::Map<const RowVector>(
        params_.value(c.bias).data.data(), c.out_channels);
    ReluInPlace(y);
    side /= 2;
    // Rows of y are (b, oi, oj); folding them back yields H/2 x W/2 x O items.
    x = Reshape(y, batch.size);
    if (tape != nullptr) {
      tape->saved_.push_back(std::move(patches));
      tape->saved_.push_back(x);
    }
  }
  return MlpForward(mlp_, x, false, tape ? &tape->saved_ : nullptr);
}

void QModel::BackwardCnn(const Tape& tape, const Matrix& grad_output) {
  const std::size_t head_start = 2 * convs_.size();
  const std::vector<Matrix> head(tape.saved_.begin() + head_start,
                                 tape.saved_.end());
  Matrix dx = MlpBackward(mlp_, head, grad_output, false);
  int side = obs::kGridCells >> convs_.size();
  for (std::size_t k = convs_.size(); k-- > 0;) {
    const Conv& c = convs_[k];
    const Matrix& patches = tape.saved_[2 * k];
    const Matrix& activation = tape.saved_[2 * k + 1];
    ReluMask(dx, activation);
    const Matrix dy = Reshape(dx, patches.rows());
    AddTo(params_.grad(c.kernel), patches.transpose() * dy);
    AddTo(params_.grad(c.bias), dy.colwise().sum());
    if (k == 0) break;
    const Matrix dpatches = dy * params_.value(c.kernel).AsMatrix().transpose();
    side *= 2;
    dx = Col2Im(dpatches, tape.size_, side, side, c.in_channels);
  }
}

// Tape layout:
//   ego encoder saves, others encoder saves,
//   per attention layer: embeddings, then per head query, key, value and
//   weights, then the concatenated heads,
//   decoder saves.
Matrix QModel::ForwardEgoAttention(const Batch& batch, Tape* tape,
                                   std::vector<AttentionTrace>* traces) const {
  const int n = batch.size;
  const int rows = batch.rows;
  if (rows < 1 || batch.inputs.rows() != static_cast<Eigen::Index>(n) * rows ||
      batch.inputs.cols() != obs::kFeatures || batch.mask.rows() != n ||
      batch.mask.cols() != rows) {
    throw UsageError(
        "attention batch must be (size * rows) x 7 with a size x rows mask");
  }
  CheckFinite(batch.inputs);
  for (int b = 0; b < n; ++b) {
    if (batch.mask(b, 0) == 0.0)
      throw UsageError("the ego row must be unmasked");
  }
  std::vector<Matrix>* saved = tape ? &tape->saved_ : nullptr;

  Matrix ego_in(n, obs::kFeatures);
  for (int b = 0; b < n; ++b) ego_in.row(b) = batch.inputs.row(b * rows);
  Matrix f = MlpForward(ego_encoder_, ego_in, true, saved);
  Matrix embeddings = MlpForward(others_encoder_, batch.inputs, true, saved);

  const int dk = arch_.key_size;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  if (traces != nullptr) traces->assign(n, AttentionTrace{});
  for (const AttentionLayer& layer : attention_) {
    for (int b = 0; b < n; ++b) embeddings.row(b * rows) = f.row(b);
    if (saved) saved->push_back(embeddings);
    Matrix concat(n, arch_.heads * dk);
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const Matrix q = f * params_.value(layer.heads[h][0]).AsMatrix();
      const Matrix k = embeddings * params_.value(layer.heads[h][1]).AsMatrix();
      const Matrix v = embeddings * params_.value(layer.heads[h][2]).AsMatrix();
      Matrix weights(n, rows);
      for (int b = 0; b < n; ++b) {
        Eigen::VectorXd scores =
            k.middleRows(b * rows, rows) * q.row(b).transpose() * scale;
        for (int r = 0; r < rows; ++r) {
          if (batch.mask(b, r) == 0.0) scores(r) = kNegInf;
        }
        const Eigen::VectorXd a = Softmax(scores);
        weights.row(b) = a.transpose();
        concat.block(b, h * dk, 1, dk) =
            a.transpose() * v.middleRows(b * rows, rows);
      }
      if (traces != nullptr) {
        for (int b = 0; b < n; ++b) {
          auto& heads = (*traces)[b].heads;
          if (heads.size() <= h) heads.resize(h + 1);
          heads[h].assign(weights.row(b).data(), weights.row(b).data() + rows);
        }
      }
      if (saved) {
        saved->push_back(q);
        saved->push_back(k);
        saved->push_back(v);
        saved->push_back(std::move(weights));
      }
    }
    if (saved) saved->push_back(concat);
    f = DenseForward(layer.combination, concat) + f;
  }
  return MlpForward(mlp_, f, false, saved);
}

void QModel::BackwardEgoAttention(const Tape& tape, const Matrix& grad_output) {
  const int n = tape.size_;
  const int rows = tape.rows_;
  const int dk = arch_.key_size;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const std::vector<Matrix>& s = tape.saved_;

  const std::size_t ego_len = ego_encoder_.size() + 1;
  const std::size_t others_len = others_encoder_.size() + 1;
  const std::size_t layer_len =
      1 + 4 * static_cast<std::size_t>(arch_.heads) + 1;
  const std::size_t attention_start = ego_len + others_len;
  const std::size_t decoder_start =
      attention_start + layer_len * attention_.size();

  const std::vector<Matrix> decoder(s.begin() + decoder_start, s.end());
  Matrix df = MlpBackward(mlp_, decoder, grad_output, false);
  Matrix d_others =
      Matrix::Zero(static_cast<Eigen::Index>(n) * rows, arch_.encoder.back());

  for (std::size_t l = attention_.size(); l-- > 0;) {
    const AttentionLayer& layer = attention_[l];
    const std::size_t base = attention_start + layer_len * l;
    const Matrix& embeddings = s[base];
    const Matrix& concat = s[base + layer_len - 1];
    Matrix f(n, embeddings.cols());
    for (int b = 0; b < n; ++b) f.row(b) = embeddings.row(b * rows);

    Matrix df_prev = df;  // residual path
    const Matrix dconcat = DenseBackward(layer.combination, concat, df);
    Matrix dembeddings = Matrix::Zero(embeddings.rows(), embeddings.cols());
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const Matrix& q = s[base + 1 + 4 * h];
      const Matrix& k = s[base + 2 + 4 * h];
      const Matrix& v = s[base + 3 + 4 * h];
      const Matrix& weights = s[base + 4 + 4 * h];
      Matrix dq(n, dk);
      Matrix dk_all(k.rows(), dk);
      Matrix dv_all(v.rows(), dk);
      for (int b = 0; b < n; ++b) {
        const Eigen::VectorXd a = weights.row(b).transpose();
        const RowVector dout = dconcat.block(b, h * dk, 1, dk);
        const Eigen::VectorXd da =
            v.middleRows(b * rows, rows) * dout.transpose();
        dv_all.middleRows(b * rows, rows) = a * dout;
        const Eigen::VectorXd ds =
            (a.array() * (da.array() - a.dot(da))).matrix() * scale;
        dq.row(b) = ds.transpose() * k.middleRows(b * rows, rows);
        dk_all.middleRows(b * rows, rows) = ds * q.row(b);
      }
      const Matrix wq = params_.value(layer.heads[h][0]).AsMatrix();
      const Matrix wk = params_.value(layer.heads[h][1]).AsMatrix();
      const Matrix wv = params_.value(layer.heads[h][2]).AsMatrix();
      AddTo(params_.grad(layer.heads[h][0]), f.transpose() * dq);
      AddTo(params_.grad(layer.heads[h][1]), embeddings.transpose() * dk_all);
      AddTo(params_.grad(layer.heads[h][2]), embeddings.transpose() * dv_all);
      df_prev += dq * wq.transpose();
      dembeddings += dk_all * wk.transpose() + dv_all * wv.transpose();
    }
    // Ego rows of this layer's embeddings are the incoming ego feature; the
    // others come straight from the encoder.
    for (int b = 0; b < n; ++b) {
      df_prev.row(b) += dembeddings.row(b * rows);
      dembeddings.row(b * rows).setZero();
    }
    d_others += dembeddings;
    df = std::move(df_prev);
  }

  const std::vector<Matrix> ego(s.begin(), s.begin() + ego_len);
  const std::vector<Matrix> others(s.begin() + ego_len,
                                   s.begin() + attention_start);
  MlpBackward(ego_encoder_, ego, df, true);
  MlpBackward(others_encoder_, others, d_others, true);
}

}  // namespace nn
}  // namespace egoattn
