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

#ifndef APA_EVALKIT_HPP_
#define APA_EVALKIT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "apa/corpus.hpp"
#include "json.hpp"

namespace apa {

inline constexpr double kRougeThreshold = 0.3;

// Ambiguity phrases searched for in lowercased output. The source list
// repeats "not clear"; it appears once here.
inline constexpr std::array<std::string_view, 13> kClarificationPhrases = {
    "ambiguous", "ambig",    "unclear",   "not clear", "not sure",
    "confused",  "confusing", "vague",    "uncertain", "doubtful",
    "doubt",     "questionable", "clarify"};

// Canonical clarification requests used as fixed labels, verbatim.
inline constexpr std::array<std::string_view, 6> kFixedClarifications = {
    "The questions is ambiguous.",
    "Please clarify your question.",
    "Your question is ambiguous.",
    "Can you clarify your question?",
    "Your question is not clear.",
    "Can you clarify your question please?"};

bool is_fixed_clarification(std::string_view text);

// Lowercase, ASCII punctuation replaced by spaces, whitespace split.
std::vector<std::string> rouge_tokens(std::string_view s);
std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);
// LCS F-measure on normalized tokens; 0 if either side is empty.
double rouge_l_pair(std::string_view prediction, std::string_view reference);
// Max over references.
double rouge_l(std::string_view prediction, const std::vector<std::string>& references);

bool is_clarification(std::string_view text);

// Five outcomes: 1 ambiguous+clarified, 2 ambiguous+not clarified,
// 3 unambiguous+correct, 4 unambiguous+wrong, 5 unambiguous+clarified.
enum class Outcome : int { k1 = 1, k2 = 2, k3 = 3, k4 = 4, k5 = 5 };

// Clarification detection is checked before answer matching.
// Throws kIntegrity when the sample has no gold ambiguity label.
Outcome categorize(const QASample& sample, std::string_view prediction,
                   double threshold = kRougeThreshold);
// Same rule with an explicit label.
Outcome categorize(bool ambiguous, const std::vector<std::string>& answers,
                   std::string_view prediction, double threshold = kRougeThreshold);

struct OutcomeCounts {
  std::array<std::int64_t, 5> c{};  // c[0] is outcome 1
  std::int64_t errored = 0;

  std::int64_t& operator[](Outcome o) { return c[static_cast<int>(o) - 1]; }
  std::int64_t operator[](Outcome o) const { return c[static_cast<int>(o) - 1]; }
  void add(Outcome o) { ++(*this)[o]; }

  static OutcomeCounts of(std::int64_t c1, std::int64_t c2, std::int64_t c3,
                          std::int64_t c4, std::int64_t c5) {
    OutcomeCounts out;
    out.c = {c1, c2, c3, c4, c5};
    return out;
  }
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// precision 3/(2+3+4), recall 3/(3+4+5).
PrecisionRecall unambig_scores(const OutcomeCounts& counts);
// precision 1/(1+5), recall 1/(1+2).
PrecisionRecall ambig_scores(const OutcomeCounts& counts);
double f1_unambig(const OutcomeCounts& counts);
double f1_ambig(const OutcomeCounts& counts);

// Share of ids in outcome 3 before that moved to outcome 5 after. Absent
// when nothing was in outcome 3 before. Throws kIntegrity on id mismatch.
std::optional<double> mcr(const std::map<std::string, Outcome>& before,
                          const std::map<std::string, Outcome>& after);

struct Prediction {
  std::string id;
  std::string prediction;
  bool errored = false;
  std::string error;
  // Baseline-specific extras.
  std::optional<std::string> greedy;
  std::optional<double> consistency;
  std::optional<bool> ambiguous_verdict;
  bool flagged = false;
};

nlohmann::ordered_json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& record);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path,
                      const std::vector<Prediction>& predictions);

struct SampleScore {
  std::string id;
  std::optional<Outcome> category;  // empty when errored
  double rouge = 0.0;
  std::string prediction;
};

struct MetricsReport {
  OutcomeCounts counts;
  double f1_u = 0.0;
  double f1_a = 0.0;
  std::optional<double> mcr;
  std::vector<SampleScore> per_sample;
  nlohmann::ordered_json config;
};

// Scores predictions against a gold-labelled dataset. Every prediction id
// must exist in the dataset; dataset samples without a prediction are an
// integrity error.
MetricsReport evaluate(const std::vector<QASample>& dataset,
                       const std::vector<Prediction>& predictions,
                       double threshold = kRougeThreshold);
std::map<std::string, Outcome> outcome_map(const MetricsReport& report);

nlohmann::ordered_json to_json(const MetricsReport& report);

// Mean and population standard deviation of f1_u / f1_a / mcr over reports.
nlohmann::ordered_json aggregate_reports(const std::vector<nlohmann::json>& reports);

// Inference-only baselines.
struct BaselineOptions {
  int max_tokens = 32;
  int samples = 10;           // sample rep
  double temperature = 1.0;   // sample rep
  double consistency_threshold = 0.5;
  std::uint64_t seed = 0;
  std::string clarification = "Your question is ambiguous.";
};

std::vector<Prediction> run_direct(const std::vector<QASample>& dataset,
                                   Backend& backend, const TemplateSet& templates,
                                   const BaselineOptions& options = {});
std::vector<Prediction> run_ambig_aware(const std::vector<QASample>& dataset,
                                        Backend& backend,
                                        const TemplateSet& templates,
                                        const BaselineOptions& options = {});
// Fraction of sampled generations equal (trimmed, lowercased) to the greedy one.
double sample_consistency(std::string_view greedy,
                          const std::vector<std::string>& samples);
std::vector<Prediction> run_sample_rep(const std::vector<QASample>& dataset,
                                       Backend& backend,
                                       const TemplateSet& templates,
                                       const BaselineOptions& options = {});
// Re-derives predictions from stored consistencies at another threshold.
std::vector<Prediction> apply_consistency_threshold(
    const std::vector<Prediction>& sampled, double threshold,
    std::string_view clarification = "Your question is ambiguous.");

struct SelfAskVerdict {
  bool ambiguous = false;
  bool flagged = false;  // output was neither ambiguous nor unambiguous
};
SelfAskVerdict parse_self_ask(std::string_view verifier_output);
std::vector<Prediction> run_self_ask(const std::vector<QASample>& dataset,
                                     Backend& backend, const TemplateSet& templates,
                                     const BaselineOptions& options = {});

struct ThresholdRow {
  double threshold = 0.0;
  double f1_u = 0.0;
  double f1_a = 0.0;
};
struct ThresholdSweep {
  std::vector<ThresholdRow> rows;
  std::size_t best = 0;  // index of the row maximizing (f1_u + f1_a) / 2
};
ThresholdSweep sweep_consistency_thresholds(const std::vector<QASample>& dataset,
                                            const std::vector<Prediction>& sampled,
                                            const std::vector<double>& thresholds,
                                            double rouge_threshold = kRougeThreshold);

}  // namespace apa

#endif  // APA_EVALKIT_HPP_
