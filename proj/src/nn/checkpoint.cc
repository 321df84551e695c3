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

#include "egoattn/nn/checkpoint.h"

#include <nlohmann/json.hpp>

#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace nn {

using nlohmann::json;

namespace {

json ArchitectureToJson(const Architecture& a) {
  return {{"fcn_hidden", a.fcn_hidden},
          {"cnn_channels", a.cnn_channels},
          {"cnn_hidden", a.cnn_hidden},
          {"encoder", a.encoder},
          {"heads", a.heads},
          {"key_size", a.key_size},
          {"attention_layers", a.attention_layers},
          {"combination_bias", a.combination_bias},
          {"decoder", a.decoder}};
}

Architecture ArchitectureFromJson(const json& j) {
  Architecture a;
  j.at("fcn_hidden").get_to(a.fcn_hidden);
  j.at("cnn_channels").get_to(a.cnn_channels);
  j.at("cnn_hidden").get_to(a.cnn_hidden);
  j.at("encoder").get_to(a.encoder);
  j.at("heads").get_to(a.heads);
  j.at("key_size").get_to(a.key_size);
  j.at("attention_layers").get_to(a.attention_layers);
  j.at("combination_bias").get_to(a.combination_bias);
  j.at("decoder").get_to(a.decoder);
  return a;
}

}  // namespace

std::string CheckpointToJson(const QModel& model,
                             const std::string& config_hash) {
  json parameters = json::object();
  for (const std::string& name : model.params().names()) {
    const Tensor& t = model.params().value(name);
    parameters[name] = {{"shape", t.shape}, {"values", t.data}};
  }
  const json doc = {{"header",
                     {{"model_kind", ModelKindName(model.kind())},
                      {"config_hash", config_hash},
                      {"format_version", kCheckpointFormatVersion}}},
                    {"architecture", ArchitectureToJson(model.architecture())},
                    {"parameters", std::move(parameters)}};
  return doc.dump();
}

QModel CheckpointFromJson(const std::string& text, std::string* config_hash) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") +
                          e.what());
  }
  try {
    const json& header = doc.at("header");
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version " +
                            std::to_string(version));
    }
    const ModelKind kind =
        ParseModelKind(header.at("model_kind").get<std::string>());
    QModel model(kind, 0, ArchitectureFromJson(doc.at("architecture")));
    const json& parameters = doc.at("parameters");
    if (parameters.size() != model.params().names().size()) {
      throw CheckpointError(
          "checkpoint parameter set does not match the architecture");
    }
    for (const std::string& name : model.params().names()) {
      if (!parameters.contains(name))
        throw CheckpointError("checkpoint lacks " + name);
      const json& entry = parameters.at(name);
      Tensor t(entry.at("shape").get<std::vector<int>>(),
               entry.at("values").get<std::vector<double>>());
      Tensor& target = model.params().value(name);
      if (t.shape != target.shape)
        throw CheckpointError("shape mismatch for " + name);
      target.data = std::move(t.data);
    }
    if (config_hash != nullptr)
      *config_hash = header.at("config_hash").get<std::string>();
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const QModel& model, const std::string& config_hash,
                    const std::filesystem::path& path) {
  util::WriteFileAtomic(path, CheckpointToJson(model, config_hash));
}

QModel LoadCheckpoint(const std::filesystem::path& path,
                      std::string* config_hash) {
  std::string text;
  try {
    text = util::ReadFile(path);
  } catch (const util::IoError& e) {
    throw CheckpointError(e.what());
  }
  return CheckpointFromJson(text, config_hash);
}

}  // namespace nn
}  // namespace egoattn
