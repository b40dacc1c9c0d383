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

#ifndef APA_PIPELINE_HPP_
#define APA_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "apa/corpus.hpp"
#include "apa/evalkit.hpp"
#include "apa/uncertainty.hpp"
#include "json.hpp"

namespace apa {

enum class SampleStatus { kCorrect, kIncorrect, kErrored };
const char* to_string(SampleStatus status);

struct AssessedSample {
  QASample sample;
  std::string model_answer;
  std::optional<Outcome> category;
  SampleStatus status = SampleStatus::kErrored;
  std::string error;
  // Average token entropy of the greedy answer, when it produced tokens.
  std::optional<double> answer_entropy;
};

// D_correct (outcomes 1 and 3), D_incorrect (2, 4, 5) and backend failures.
struct StageOnePartition {
  std::vector<AssessedSample> correct;
  std::vector<AssessedSample> incorrect;
  std::vector<AssessedSample> errored;

  std::size_t n() const { return correct.size(); }
  std::vector<AssessedSample> all() const;
};

struct AssessOptions {
  int max_tokens = 32;
  double rouge_threshold = kRougeThreshold;
  TruncationMode mode = TruncationMode::kTailLump;
};

// Greedy answer per sample under the direct template. Samples without a gold
// ambiguity label are judged as unambiguous questions.
StageOnePartition stage1_assess(const std::vector<QASample>& dataset,
                                Backend& backend, const PromptTemplate& direct,
                                const AssessOptions& options = {});

struct DisambiguationRecord {
  std::string sample_id;
  std::string query;
  std::string disambig;
  double h_query = 0.0;
  double h_disambig = 0.0;
  double info_gain = 0.0;
  Verdict verdict = Verdict::kPerceivedUnambiguous;
  bool empty_disambiguation = false;
  std::optional<std::string> error;  // set when the backend failed
};

struct DisambiguateOptions {
  int max_tokens = 64;
  TruncationMode mode = TruncationMode::kTailLump;
  double epsilon = kDefaultEpsilon;
};

// One record per incorrect sample, in input order. Entropies score the bare
// question and the bare disambiguation with an empty prefix.
std::vector<DisambiguationRecord> stage2_disambiguate(
    const std::vector<AssessedSample>& incorrect, Backend& backend,
    const PromptTemplate& disambig_template, const DisambiguateOptions& options = {});

enum class ClarifyKind { kFixed, kGenerated };
const char* to_string(ClarifyKind kind);
std::optional<ClarifyKind> clarify_kind_from_string(std::string_view name);

struct ClarifyLabel {
  std::string sample_id;
  std::string text;
  ClarifyKind kind = ClarifyKind::kFixed;
  bool fallback_fixed = false;  // generated output lacked an ambiguity phrase
};

ClarifyLabel stage3_fixed_label(std::string_view sample_id, std::uint64_t seed);
ClarifyLabel stage3_generated_label(const DisambiguationRecord& record,
                                    Backend& backend,
                                    const PromptTemplate& clarify_template,
                                    std::uint64_t seed, int max_tokens = 64);

enum class SelectionStrategy {
  kApaInfoGain,
  kGtRandom,
  kGtMaxInfoGain,
  kGtMinInfoGain,
  kAnswerEntropy,
  kPlainRandom,
};
const char* to_string(SelectionStrategy strategy);
std::optional<SelectionStrategy> selection_strategy_from_string(std::string_view name);

struct Selection {
  std::vector<AssessedSample> correct;
  std::vector<AssessedSample> ambiguous;
};

// Builds the balanced halves feeding the training set:
//  apa_infogain    perceived-ambiguous records; larger side trimmed (random
//                  correct samples, or the largest-gain ambiguous ones).
//  gt_random/max/min  gold-ambiguous records only, m = APA pool size.
//  answer_entropy  gold-ambiguous samples with the highest answer entropy and
//                  random gold-unambiguous samples, APA-sized budget.
//  plain_random    random gold-ambiguous and gold-unambiguous samples,
//                  APA-sized budget.
Selection select_and_balance(const StageOnePartition& partition,
                             const std::vector<DisambiguationRecord>& records,
                             SelectionStrategy strategy, double epsilon,
                             std::uint64_t seed);

// Number of records with info_gain > epsilon, per epsilon.
std::vector<std::size_t> sweep_epsilon(const std::vector<DisambiguationRecord>& records,
                                       const std::vector<double>& epsilons);

// Checkpoint rows.
nlohmann::ordered_json to_json(const AssessedSample& s);
AssessedSample assessed_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const DisambiguationRecord& r);
DisambiguationRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ClarifyLabel& l);
ClarifyLabel label_from_json(const nlohmann::json& j);

void save_partition(const std::filesystem::path& path, const StageOnePartition& p);
StageOnePartition load_partition(const std::filesystem::path& path);
void save_records(const std::filesystem::path& path,
                  const std::vector<DisambiguationRecord>& records);
std::vector<DisambiguationRecord> load_records(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<ClarifyLabel>& labels);
std::vector<ClarifyLabel> load_labels(const std::filesystem::path& path);
void save_selection(const std::filesystem::path& path, const Selection& selection);
Selection load_selection(const std::filesystem::path& path);

}  // namespace apa

#endif  // APA_PIPELINE_HPP_
