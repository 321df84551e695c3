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

#include "egoattn/exp/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace exp {
namespace {

using Kind = ConfigError::Kind;

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string FormatDouble(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& raw) {
  const std::string s = Trim(raw);
  T value{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError(Kind::kSyntax, key, "expected a number, got '" + s + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw ConfigError(Kind::kRange, key, "must be finite");
  }
  return value;
}

bool ParseBool(const std::string& key, const std::string& raw) {
  const std::string s = Trim(raw);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(Kind::kSyntax, key,
                    "expected true or false, got '" + s + "'");
}

std::string ParseString(const std::string& key, const std::string& raw) {
  std::string s = Trim(raw);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  if (s.find('"') != std::string::npos) {
    throw ConfigError(Kind::kSyntax, key, "unbalanced quotes");
  }
  return s;
}

template <typename T>
std::vector<T> ParseList(const std::string& key, const std::string& raw) {
  std::string s = Trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']')
      throw ConfigError(Kind::kSyntax, key, "unterminated list");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<T> out;
  if (Trim(s).empty()) return out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    out.push_back(ParseNumber<T>(key, item));
  return out;
}

template <typename T>
std::string FormatList(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? ", " : "") + std::to_string(v[i]);
  return out + "]";
}

void Require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError(Kind::kRange, key, "must be " + rule);
}

std::string TurnName(sim::Turn t) {
  switch (t) {
    case sim::Turn::kLeft:
      return "left";
    case sim::Turn::kStraight:
      return "straight";
    case sim::Turn::kRight:
      return "right";
  }
  return "";
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)>
      set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Integer-valued key with an inclusive lower bound (and optional upper).
Key Int(const std::string& name, std::function<int&(ExperimentConfig&)> field,
        int lo, int hi = std::numeric_limits<int>::max()) {
  return {name,
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const int x = ParseNumber<int>(k, v);
            Require(x >= lo && x <= hi, k,
                    "in [" + std::to_string(lo) + ", " +
                        (hi == std::numeric_limits<int>::max()
                             ? "inf"
                             : std::to_string(hi)) +
                        "]");
            field(c) = x;
          },
          [=](const ExperimentConfig& c) {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          }};
}

Key Real(const std::string& name,
         std::function<double&(ExperimentConfig&)> field,
         std::function<bool(double)> ok, const std::string& rule) {
  return {name,
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const double x = ParseNumber<double>(k, v);
            Require(ok(x), k, rule);
            field(c) = x;
          },
          [=](const ExperimentConfig& c) {
            return FormatDouble(field(const_cast<ExperimentConfig&>(c)));
          }};
}

Key Bool(const std::string& name,
         std::function<bool&(ExperimentConfig&)> field) {
  return {name,
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            field(c) = ParseBool(k, v);
          },
          [=](const ExperimentConfig& c) {
            return field(const_cast<ExperimentConfig&>(c))
                       ? std::string("true")
                       : std::string("false");
          }};
}

Key Sizes(const std::string& name,
          std::function<std::vector<int>&(ExperimentConfig&)> field,
          bool allow_empty) {
  return {name,
          [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            std::vector<int> x = ParseList<int>(k, v);
            Require(allow_empty || !x.empty(), k, "a non-empty list");
            Require(
                std::all_of(x.begin(), x.end(), [](int n) { return n > 0; }), k,
                "a list of positive sizes");
            field(c) = std::move(x);
          },
          [=](const ExperimentConfig& c) {
            return FormatList(field(const_cast<ExperimentConfig&>(c)));
          }};
}

const std::vector<Key>& Keys() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    const auto positive = [](double x) { return x > 0.0; };
    const auto unit_open = [](double x) { return x >= 0.0 && x < 1.0; };
    const auto unit_closed = [](double x) { return x >= 0.0 && x <= 1.0; };

    k.push_back(Int(
        "env.min_vehicles", [](auto& c) -> int& { return c.env.min_vehicles; },
        0, sim::kMaxOtherVehicles));
    k.push_back(Int(
        "env.max_vehicles", [](auto& c) -> int& { return c.env.max_vehicles; },
        0, sim::kMaxOtherVehicles));
    k.push_back(Bool("env.ego_priority",
                     [](auto& c) -> bool& { return c.env.ego_priority; }));
    k.push_back(
        {"env.ego_destination",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           const std::string s = ParseString(key, v);
           for (sim::Turn t :
                {sim::Turn::kLeft, sim::Turn::kStraight, sim::Turn::kRight}) {
             if (TurnName(t) == s) {
               c.env.ego_turn = t;
               return;
             }
           }
           throw ConfigError(Kind::kRange, key,
                             "must be left, straight or right");
         },
         [](const ExperimentConfig& c) { return TurnName(c.env.ego_turn); }});
    k.push_back(
        Int("env.horizon", [](auto& c) -> int& { return c.env.horizon; }, 1));
    k.push_back(
        Bool("env.yielding", [](auto& c) -> bool& { return c.env.yielding; }));
    k.push_back(
        {"env.seeds",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           std::vector<std::uint64_t> seeds = ParseList<std::uint64_t>(key, v);
           Require(!seeds.empty(), key, "a non-empty list");
           c.seeds = std::move(seeds);
         },
         [](const ExperimentConfig& c) { return FormatList(c.seeds); }});

    k.push_back(
        {"agent.kind",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           try {
             c.agent = nn::ParseModelKind(ParseString(key, v));
           } catch (const std::invalid_argument&) {
             throw ConfigError(Kind::kRange, key,
                               "must be fcn_list, cnn_grid or ego_attention");
           }
         },
         [](const ExperimentConfig& c) { return nn::ModelKindName(c.agent); }});
    k.push_back(Sizes(
        "agent.fcn_hidden",
        [](auto& c) -> std::vector<int>& { return c.architecture.fcn_hidden; },
        true));
    k.push_back(Sizes(
        "agent.cnn_channels",
        [](auto& c) -> std::vector<int>& {
          return c.architecture.cnn_channels;
        },
        false));
    k.push_back(Int(
        "agent.cnn_hidden",
        [](auto& c) -> int& { return c.architecture.cnn_hidden; }, 1));
    k.push_back(Sizes(
        "agent.encoder",
        [](auto& c) -> std::vector<int>& { return c.architecture.encoder; },
        false));
    k.push_back(Sizes(
        "agent.decoder",
        [](auto& c) -> std::vector<int>& { return c.architecture.decoder; },
        true));
    k.push_back(Int(
        "agent.heads", [](auto& c) -> int& { return c.architecture.heads; },
        1));
    k.push_back(Int(
        "agent.key_size",
        [](auto& c) -> int& { return c.architecture.key_size; }, 1));
    k.push_back(Int(
        "agent.attention_layers",
        [](auto& c) -> int& { return c.architecture.attention_layers; }, 1));
    k.push_back(Bool("agent.combination_bias", [](auto& c) -> bool& {
      return c.architecture.combination_bias;
    }));

    k.push_back(Real(
        "training.gamma", [](auto& c) -> double& { return c.training.gamma; },
        unit_open, "in [0, 1)"));
    k.push_back(Real(
        "training.learning_rate",
        [](auto& c) -> double& { return c.training.learning_rate; }, positive,
        "positive"));
    k.push_back(Real(
        "training.adam_beta1",
        [](auto& c) -> double& { return c.training.adam_beta1; }, unit_open,
        "in [0, 1)"));
    k.push_back(Real(
        "training.adam_beta2",
        [](auto& c) -> double& { return c.training.adam_beta2; }, unit_open,
        "in [0, 1)"));
    k.push_back(Int(
        "training.batch_size",
        [](auto& c) -> int& { return c.training.batch_size; }, 1));
    k.push_back(Int(
        "training.replay_capacity",
        [](auto& c) -> int& { return c.training.replay_capacity; }, 1));
    k.push_back(Int(
        "training.target_sync",
        [](auto& c) -> int& { return c.training.target_sync; }, 1));
    k.push_back(Real(
        "training.epsilon_start",
        [](auto& c) -> double& { return c.training.epsilon.start; },
        unit_closed, "in [0, 1]"));
    k.push_back(Real(
        "training.epsilon_end",
        [](auto& c) -> double& { return c.training.epsilon.end; }, unit_closed,
        "in [0, 1]"));
    k.push_back(
        {"training.epsilon_decay_steps",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           const auto x = ParseNumber<std::int64_t>(key, v);
           Require(x > 0, key, "positive");
           c.training.epsilon.decay_steps = x;
         },
         [](const ExperimentConfig& c) {
           return std::to_string(c.training.epsilon.decay_steps);
         }});
    k.push_back(Int(
        "training.episodes",
        [](auto& c) -> int& { return c.training.episodes; }, 1));

    k.push_back(Int(
        "evaluation.episodes", [](auto& c) -> int& { return c.eval_episodes; },
        1));
    k.push_back(
        {"evaluation.seed",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           c.eval_seed = ParseNumber<std::uint64_t>(key, v);
         },
         [](const ExperimentConfig& c) {
           return std::to_string(c.eval_seed);
         }});
    k.push_back(
        {"output.dir",
         [](ExperimentConfig& c, const std::string& key, const std::string& v) {
           std::string s = ParseString(key, v);
           Require(!s.empty(), key, "non-empty");
           c.output_dir = std::move(s);
         },
         [](const ExperimentConfig& c) { return "\"" + c.output_dir + "\""; }});
    std::sort(k.begin(), k.end(),
              [](const Key& a, const Key& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

const Key* FindKey(const std::string& name) {
  for (const Key& k : Keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

// Rules that involve several keys, reported against the later one.
void ValidateConfig(const ExperimentConfig& c) {
  Require(c.env.min_vehicles <= c.env.max_vehicles, "env.max_vehicles",
          ">= env.min_vehicles");
  Require(c.training.replay_capacity >= c.training.batch_size,
          "training.replay_capacity", ">= training.batch_size");
  Require(
      c.architecture.heads * c.architecture.key_size ==
          c.architecture.encoder.back(),
      "agent.key_size",
      "such that agent.heads * agent.key_size equals the last encoder size");
  try {
    c.architecture.Validate(c.agent);
  } catch (const nn::UsageError& e) {
    throw ConfigError(Kind::kRange, "agent", e.what());
  }
}

ConfigError::ConfigError(Kind kind, std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : key + ": " + message),
      kind_(kind),
      key_(std::move(key)) {}

void SetConfigValue(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  const Key* k = FindKey(key);
  if (k == nullptr) throw ConfigError(Kind::kUnknownKey, key, "unknown key");
  k->set(config, key, value);
}

ExperimentConfig ParseConfigText(const std::string& text) {
  ExperimentConfig config;
  std::stringstream in(text);
  int line_number = 0;
  std::map<std::string, int> seen;
  for (std::string line; std::getline(in, line);) {
    ++line_number;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_number);
    if (eq == std::string::npos) {
      throw ConfigError(Kind::kSyntax, "", where + ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    if (key.empty())
      throw ConfigError(Kind::kSyntax, "", where + ": missing key");
    if (seen.count(key)) {
      throw ConfigError(
          Kind::kSyntax, key,
          where + ": duplicate of line " + std::to_string(seen[key]));
    }
    seen[key] = line_number;
    SetConfigValue(config, key, value);
  }
  ValidateConfig(config);
  return config;
}

ExperimentConfig ParseConfigFile(const std::filesystem::path& path) {
  std::string text;
  try {
    text = util::ReadFile(path);
  } catch (const util::IoError&) {
    throw ConfigError(Kind::kMissingFile, "",
                      "cannot read config file " + path.string());
  }
  return ParseConfigText(text);
}

std::map<std::string, std::string> ConfigValues(
    const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const Key& k : Keys()) out[k.name] = k.get(config);
  return out;
}

std::string ConfigText(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, value] : ConfigValues(config))
    out += key + " = " + value + "\n";
  return out;
}

std::string ConfigHash(const ExperimentConfig& config) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& [key, value] : ConfigValues(config)) {
    if (key == "output.dir") continue;
    for (char ch : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001B3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace exp
}  // namespace egoattn
