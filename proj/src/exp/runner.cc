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

#include "egoattn/exp/runner.h"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <thread>

#include "egoattn/nn/checkpoint.h"
#include "egoattn/util/atomic_file.h"

namespace egoattn {
namespace exp {
namespace {

void CheckWritable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw util::IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::filesystem::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out)
      throw util::IoError("output directory " + dir.string() +
                          " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace

std::string GitBlobHash(const std::string& content) {
  const std::string blob =
      "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), blob.data(), blob.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &size) != 1) {
    throw std::runtime_error("SHA-1 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < size; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::filesystem::path RunDirectory(const std::filesystem::path& out,
                                   nn::ModelKind agent, std::uint64_t seed) {
  return out / nn::ModelKindName(agent) / std::to_string(seed);
}

std::string ManifestJson(const ExperimentConfig& config, std::uint64_t seed) {
  nlohmann::ordered_json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["code_hash"] = GitBlobHash(kCodeVersion);
  manifest["seed"] = seed;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (const auto& [key, value] : ConfigValues(config)) values[key] = value;
  manifest["config"] = values;
  return manifest.dump(2) + "\n";
}

std::vector<dqn::EpisodeMetrics> TrainRun(const ExperimentConfig& config,
                                          std::uint64_t seed,
                                          const std::filesystem::path& dir,
                                          const EpisodeCallback& on_episode) {
  CheckWritable(dir);
  dqn::TrainConfig training = config.training;
  training.seed = seed;
  dqn::TrainingResult result = dqn::RunTraining(
      config.env, config.agent, training, config.architecture, on_episode);
  nn::SaveCheckpoint(result.model, ConfigHash(config), dir / kCheckpointFile);
  std::ostringstream csv;
  dqn::WriteMetricsCsv(csv, result.metrics);
  util::WriteFileAtomic(dir / kMetricsFile, csv.str());
  util::WriteFileAtomic(dir / kManifestFile, ManifestJson(config, seed));
  return std::move(result.metrics);
}

void TrainRuns(
    const std::vector<RunSpec>& specs, int jobs,
    const std::function<void(const RunSpec&, const dqn::EpisodeMetrics&)>&
        progress) {
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      const RunSpec& spec = specs[i];
      try {
        EpisodeCallback callback;
        if (progress) {
          callback = [&](const dqn::EpisodeMetrics& m) {
            std::lock_guard<std::mutex> lock(mu);
            progress(spec, m);
          };
        }
        TrainRun(spec.config, spec.seed, spec.dir, callback);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads =
      static_cast<int>(std::min<std::size_t>(jobs, specs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<RunSpec> SeedRuns(const ExperimentConfig& config) {
  std::vector<RunSpec> specs;
  for (std::uint64_t seed : config.seeds) {
    specs.push_back(
        {config, seed, RunDirectory(config.output_dir, config.agent, seed)});
  }
  return specs;
}

std::vector<dqn::EpisodeMetrics> ReadMetricsFile(
    const std::filesystem::path& path) {
  std::istringstream in(util::ReadFile(path));
  try {
    return dqn::ReadMetricsCsv(in);
  } catch (const std::runtime_error& e) {
    throw util::IoError(path.string() + ": " + e.what());
  }
}

}  // namespace exp
}  // namespace egoattn
