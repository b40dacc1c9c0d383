// Copyright 2026 The APA Toolkit Authors.
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

#ifndef APA_RUN_HPP_
#define APA_RUN_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "apa/corpus.hpp"
#include "apa/evalkit.hpp"
#include "apa/pipeline.hpp"
#include "apa/sft.hpp"
#include "apa/uncertainty.hpp"
#include "json.hpp"

namespace apa::run {

struct BackendSpec {
  std::string kind = "toy";  // toy | remote
  std::filesystem::path fixture;
  std::string endpoint;
  std::string model;
  std::string api_key;
  int top_k = 5;
  int parallelism = 4;
  int max_attempts = 3;
  int retry_base_ms = 500;
  int timeout_s = 120;
};

struct RunConfig {
  BackendSpec backend;
  double epsilon = kDefaultEpsilon;
  TruncationMode mode = TruncationMode::kTailLump;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> template_dir;
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "apa_run";
  SelectionStrategy strategy = SelectionStrategy::kApaInfoGain;
  ClarifyKind clarify_kind = ClarifyKind::kFixed;
  double rouge_threshold = kRougeThreshold;
  int max_answer_tokens = 32;
  int max_disambig_tokens = 64;
  int max_clarify_tokens = 64;
  int samplerep_samples = 10;
  double samplerep_temperature = 1.0;
  double samplerep_threshold = 0.5;

  // Relative paths resolve against `base_dir` (the config file's folder).
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  // Flag-style override. Keys: seed, epsilon, backend, out, dataset,
  // strategy, clarify, mode, top_k, parallelism, template_dir,
  // samplerep_threshold. Throws kConfig on an unknown key or bad value.
  void set(std::string_view key, std::string_view value);

  // Throws kConfig when epsilon is not finite, parallelism < 1 or a
  // configured path does not exist.
  void validate() const;

  nlohmann::ordered_json to_json() const;  // api_key redacted
  std::string hash() const;
};

std::unique_ptr<Backend> make_backend(const RunConfig& config);
TemplateSet load_templates(const RunConfig& config);

namespace files {
inline constexpr std::string_view kPartition = "partition.jsonl";
inline constexpr std::string_view kRecords = "records.jsonl";
inline constexpr std::string_view kSelection = "selection.jsonl";
inline constexpr std::string_view kLabels = "labels.jsonl";
inline constexpr std::string_view kSft = "sft.jsonl";
inline constexpr std::string_view kManifest = "manifest.json";
}  // namespace files

// Pipeline commands. Each reads its prerequisite checkpoint from
// config.out_dir, writes its own, updates the manifest and returns a summary.
// A `backend` argument overrides the one built from the config.
nlohmann::ordered_json cmd_assess(const RunConfig& config, Backend* backend = nullptr);
nlohmann::ordered_json cmd_detect(const RunConfig& config, Backend* backend = nullptr);
nlohmann::ordered_json cmd_label(const RunConfig& config, Backend* backend = nullptr);
nlohmann::ordered_json cmd_emit(const RunConfig& config);

struct EvalRequest {
  std::optional<std::string> strategy;  // direct|ambig_aware|sample_rep|self_ask
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> compare_before;
  std::optional<std::filesystem::path> compare_after;
  std::vector<std::filesystem::path> aggregate;
};

nlohmann::ordered_json cmd_eval(const RunConfig& config, const EvalRequest& request,
                                Backend* backend = nullptr);

// CSV tables.
std::string cmd_sweep_epsilon(const RunConfig& config, const std::vector<double>& epsilons);
std::string cmd_sweep_samplerep(const RunConfig& config,
                                const std::vector<double>& thresholds,
                                const std::filesystem::path& sampled_predictions);

nlohmann::ordered_json cmd_ambiguate(const RunConfig& config,
                                     const std::optional<std::filesystem::path>& allowlist,
                                     Backend* backend = nullptr);

}  // namespace apa::run

#endif  // APA_RUN_HPP_
