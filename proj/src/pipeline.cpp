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

#include "apa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "apa/error.hpp"
#include "apa/io.hpp"
#include "apa/parallel.hpp"
#include "apa/seeding.hpp"
#include "apa/text.hpp"

namespace apa {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(SampleStatus status) {
  switch (status) {
    case SampleStatus::kCorrect: return "correct";
    case SampleStatus::kIncorrect: return "incorrect";
    case SampleStatus::kErrored: return "errored";
  }
  return "errored";
}

std::vector<AssessedSample> StageOnePartition::all() const {
  std::vector<AssessedSample> out = correct;
  out.insert(out.end(), incorrect.begin(), incorrect.end());
  out.insert(out.end(), errored.begin(), errored.end());
  return out;
}

StageOnePartition stage1_assess(const std::vector<QASample>& dataset,
                                Backend& backend, const PromptTemplate& direct,
                                const AssessOptions& options) {
  std::vector<AssessedSample> assessed(dataset.size());
  parallel_for(dataset.size(), backend.parallelism(), [&](std::size_t i) {
    AssessedSample& a = assessed[i];
    a.sample = dataset[i];
    try {
      const auto gen = backend.generate(direct.render({{"question", a.sample.question}}),
                                        GenerationParams::greedy(options.max_tokens));
      a.model_answer = text::trim_generation(gen.text);
      if (!gen.tokens.empty()) {
        a.answer_entropy = average_entropy(gen.tokens, options.mode);
      }
      const bool ambiguous = a.sample.gold_ambiguous.value_or(false);
      a.category = categorize(ambiguous, a.sample.answers, a.model_answer,
                              options.rouge_threshold);
      a.status = (*a.category == Outcome::k1 || *a.category == Outcome::k3)
                     ? SampleStatus::kCorrect
                     : SampleStatus::kIncorrect;
    } catch (const Error& e) {
      a.status = SampleStatus::kErrored;
      a.error = e.what();
    }
  });

  StageOnePartition partition;
  for (auto& a : assessed) {
    switch (a.status) {
      case SampleStatus::kCorrect: partition.correct.push_back(std::move(a)); break;
      case SampleStatus::kIncorrect: partition.incorrect.push_back(std::move(a)); break;
      case SampleStatus::kErrored: partition.errored.push_back(std::move(a)); break;
    }
  }
  return partition;
}

std::vector<DisambiguationRecord> stage2_disambiguate(
    const std::vector<AssessedSample>& incorrect, Backend& backend,
    const PromptTemplate& disambig_template, const DisambiguateOptions& options) {
  if (!std::isfinite(options.epsilon)) {
    throw Error(ErrorKind::kConfig, "epsilon must be finite");
  }
  std::vector<DisambiguationRecord> records(incorrect.size());
  parallel_for(incorrect.size(), backend.parallelism(), [&](std::size_t i) {
    const QASample& sample = incorrect[i].sample;
    DisambiguationRecord& r = records[i];
    r.sample_id = sample.id;
    r.query = sample.question;
    try {
      const auto gen =
          backend.generate(disambig_template.render({{"question", sample.question}}),
                           GenerationParams::greedy(options.max_tokens));
      r.disambig = text::trim_generation(gen.text);
      const auto hq = sentence_entropy(backend, r.query, options.mode);
      if (r.disambig.empty()) {
        r.empty_disambiguation = true;
        r.h_query = r.h_disambig = hq.average_entropy;
        r.info_gain = 0.0;
        r.verdict = Verdict::kPerceivedUnambiguous;
        return;
      }
      const auto hd = sentence_entropy(backend, r.disambig, options.mode);
      const auto report = make_report(hq, hd, options.epsilon);
      r.h_query = report.h_query;
      r.h_disambig = report.h_disambig;
      r.info_gain = report.info_gain;
      r.verdict = report.verdict;
    } catch (const Error& e) {
      r.error = e.what();
      r.verdict = Verdict::kPerceivedUnambiguous;
    }
  });
  return records;
}

const char* to_string(ClarifyKind kind) {
  return kind == ClarifyKind::kFixed ? "fixed" : "generated";
}

std::optional<ClarifyKind> clarify_kind_from_string(std::string_view name) {
  if (name == "fixed") return ClarifyKind::kFixed;
  if (name == "generated") return ClarifyKind::kGenerated;
  return std::nullopt;
}

ClarifyLabel stage3_fixed_label(std::string_view sample_id, std::uint64_t seed) {
  const auto idx =
      derive_index(seed, "fixed_label", sample_id, kFixedClarifications.size());
  return {std::string(sample_id), std::string(kFixedClarifications[idx]),
          ClarifyKind::kFixed, false};
}

ClarifyLabel stage3_generated_label(const DisambiguationRecord& record,
                                    Backend& backend,
                                    const PromptTemplate& clarify_template,
                                    std::uint64_t seed, int max_tokens) {
  if (record.disambig.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "record '" + record.sample_id + "' has no disambiguation");
  }
  const auto prompt = clarify_template.render(
      {{"question", record.query}, {"disambiguation", record.disambig}});
  const auto text = text::trim_generation(
      backend.generate(prompt, GenerationParams::greedy(max_tokens)).text);
  if (!is_clarification(text)) {
    auto fallback = stage3_fixed_label(record.sample_id, seed);
    fallback.fallback_fixed = true;
    return fallback;
  }
  return {record.sample_id, text, ClarifyKind::kGenerated, false};
}

const char* to_string(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::kApaInfoGain: return "apa_infogain";
    case SelectionStrategy::kGtRandom: return "gt_random";
    case SelectionStrategy::kGtMaxInfoGain: return "gt_max_infogain";
    case SelectionStrategy::kGtMinInfoGain: return "gt_min_infogain";
    case SelectionStrategy::kAnswerEntropy: return "answer_entropy";
    case SelectionStrategy::kPlainRandom: return "plain_random";
  }
  return "apa_infogain";
}

std::optional<SelectionStrategy> selection_strategy_from_string(std::string_view name) {
  for (auto s : {SelectionStrategy::kApaInfoGain, SelectionStrategy::kGtRandom,
                 SelectionStrategy::kGtMaxInfoGain, SelectionStrategy::kGtMinInfoGain,
                 SelectionStrategy::kAnswerEntropy, SelectionStrategy::kPlainRandom}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

// First k items under the keyed random order for `purpose`, returned in
// their original order.
std::vector<AssessedSample> random_subset(const std::vector<AssessedSample>& items,
                                          std::size_t k, std::uint64_t seed,
                                          std::string_view purpose) {
  if (k >= items.size()) return items;
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    keyed.emplace_back(derive_seed(seed, purpose, items[i].sample.id), i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < k; ++i) chosen.push_back(keyed[i].second);
  std::sort(chosen.begin(), chosen.end());
  std::vector<AssessedSample> out;
  for (auto idx : chosen) out.push_back(items[idx]);
  return out;
}

struct Scored {
  const AssessedSample* sample;
  double key;
  std::size_t order;
};

// k items with the largest (or smallest) key, ties by input order; returned
// in input order.
std::vector<AssessedSample> extreme_subset(std::vector<Scored> scored, std::size_t k,
                                           bool largest) {
  std::stable_sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
    return largest ? a.key > b.key : a.key < b.key;
  });
  if (scored.size() > k) scored.resize(k);
  std::sort(scored.begin(), scored.end(),
            [](const Scored& a, const Scored& b) { return a.order < b.order; });
  std::vector<AssessedSample> out;
  for (const auto& s : scored) out.push_back(*s.sample);
  return out;
}

void require_gold_labels(const std::vector<AssessedSample>& samples,
                         SelectionStrategy strategy) {
  for (const auto& a : samples) {
    if (!a.sample.gold_ambiguous) {
      throw Error(ErrorKind::kConfig,
                  std::string("strategy ") + to_string(strategy) +
                      " needs gold ambiguity labels; sample '" + a.sample.id +
                      "' has none");
    }
  }
}

}  // namespace

Selection select_and_balance(const StageOnePartition& partition,
                             const std::vector<DisambiguationRecord>& records,
                             SelectionStrategy strategy, double epsilon,
                             std::uint64_t seed) {
  if (!std::isfinite(epsilon)) throw Error(ErrorKind::kConfig, "epsilon must be finite");

  std::map<std::string, const AssessedSample*> incorrect_by_id;
  for (const auto& a : partition.incorrect) incorrect_by_id[a.sample.id] = &a;

  // Perceived-ambiguous pool at this epsilon, in record order.
  std::vector<Scored> apa_pool;
  std::vector<Scored> usable;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.error) continue;
    auto it = incorrect_by_id.find(r.sample_id);
    if (it == incorrect_by_id.end()) {
      throw Error(ErrorKind::kIntegrity,
                  "record '" + r.sample_id + "' is not in D_incorrect");
    }
    usable.push_back({it->second, r.info_gain, i});
    if (classify(r.info_gain, epsilon) == Verdict::kPerceivedAmbiguous) {
      apa_pool.push_back({it->second, r.info_gain, i});
    }
  }
  const std::size_t n = partition.correct.size();
  const std::size_t m = apa_pool.size();
  if (m == 0) {
    throw Error(ErrorKind::kConfig,
                "no perceived-ambiguous samples at epsilon " + std::to_string(epsilon) +
                    "; try a lower epsilon");
  }
  if (n == 0) {
    throw Error(ErrorKind::kConfig, "D_correct is empty; nothing to balance against");
  }
  const std::size_t budget = std::min(n, m);

  Selection out;
  switch (strategy) {
    case SelectionStrategy::kApaInfoGain: {
      out.ambiguous = extreme_subset(apa_pool, budget, /*largest=*/true);
      out.correct = random_subset(partition.correct, budget, seed, "balance_correct");
      break;
    }
    case SelectionStrategy::kGtRandom:
    case SelectionStrategy::kGtMaxInfoGain:
    case SelectionStrategy::kGtMinInfoGain: {
      std::vector<AssessedSample> pool_samples;
      for (const auto& s : usable) pool_samples.push_back(*s.sample);
      require_gold_labels(pool_samples, strategy);
      std::vector<Scored> gold;
      for (const auto& s : usable) {
        if (*s.sample->sample.gold_ambiguous) gold.push_back(s);
      }
      if (gold.empty()) {
        throw Error(ErrorKind::kConfig, "no gold-ambiguous samples in D_incorrect");
      }
      const std::size_t k = std::min(budget, gold.size());
      if (strategy == SelectionStrategy::kGtRandom) {
        std::vector<AssessedSample> gold_samples;
        for (const auto& s : gold) gold_samples.push_back(*s.sample);
        out.ambiguous = random_subset(gold_samples, k, seed, "gt_random");
      } else {
        out.ambiguous =
            extreme_subset(gold, k, strategy == SelectionStrategy::kGtMaxInfoGain);
      }
      out.correct = random_subset(partition.correct, k, seed, "balance_correct");
      break;
    }
    case SelectionStrategy::kAnswerEntropy:
    case SelectionStrategy::kPlainRandom: {
      std::vector<AssessedSample> everything = partition.correct;
      everything.insert(everything.end(), partition.incorrect.begin(),
                        partition.incorrect.end());
      require_gold_labels(everything, strategy);
      std::vector<AssessedSample> gold_ambig;
      std::vector<AssessedSample> gold_unambig;
      for (const auto& a : everything) {
        (*a.sample.gold_ambiguous ? gold_ambig : gold_unambig).push_back(a);
      }
      const std::size_t k = std::min({budget, gold_ambig.size(), gold_unambig.size()});
      if (k == 0) {
        throw Error(ErrorKind::kConfig,
                    "need both gold-ambiguous and gold-unambiguous samples");
      }
      if (strategy == SelectionStrategy::kPlainRandom) {
        out.ambiguous = random_subset(gold_ambig, k, seed, "plain_random_ambig");
      } else {
        std::vector<Scored> scored;
        for (std::size_t i = 0; i < gold_ambig.size(); ++i) {
          if (!gold_ambig[i].answer_entropy) {
            throw Error(ErrorKind::kConfig, "answer_entropy strategy: sample '" +
                                                gold_ambig[i].sample.id +
                                                "' has no answer entropy");
          }
          scored.push_back({&gold_ambig[i], *gold_ambig[i].answer_entropy, i});
        }
        out.ambiguous = extreme_subset(scored, k, /*largest=*/true);
      }
      out.correct = random_subset(gold_unambig, k, seed, "plain_random_unambig");
      break;
    }
  }
  return out;
}

std::vector<std::size_t> sweep_epsilon(const std::vector<DisambiguationRecord>& records,
                                       const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw Error(ErrorKind::kPrecondition, "no epsilon values given");
  std::vector<std::size_t> sizes;
  sizes.reserve(epsilons.size());
  for (double eps : epsilons) {
    sizes.push_back(static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const auto& r) {
          return !r.error && classify(r.info_gain, eps) == Verdict::kPerceivedAmbiguous;
        })));
  }
  return sizes;
}

// ---- checkpoints --------------------------------------------------------

ordered_json to_json(const AssessedSample& s) {
  ordered_json out;
  out["sample"] = to_json(s.sample);
  out["status"] = to_string(s.status);
  out["model_answer"] = s.model_answer;
  out["category"] = s.category ? json(static_cast<int>(*s.category)) : json(nullptr);
  out["answer_entropy"] = s.answer_entropy ? json(*s.answer_entropy) : json(nullptr);
  if (!s.error.empty()) out["error"] = s.error;
  return out;
}

AssessedSample assessed_from_json(const json& j) {
  AssessedSample s;
  try {
    s.sample = sample_from_json(j.at("sample"));
    const auto status = j.at("status").get<std::string>();
    if (status == "correct") {
      s.status = SampleStatus::kCorrect;
    } else if (status == "incorrect") {
      s.status = SampleStatus::kIncorrect;
    } else if (status == "errored") {
      s.status = SampleStatus::kErrored;
    } else {
      throw Error(ErrorKind::kIntegrity, "unknown status '" + status + "'");
    }
    s.model_answer = j.value("model_answer", std::string());
    if (j.contains("category") && !j["category"].is_null()) {
      const int c = j["category"].get<int>();
      if (c < 1 || c > 5) throw Error(ErrorKind::kIntegrity, "category out of range");
      s.category = static_cast<Outcome>(c);
    }
    if (j.contains("answer_entropy") && !j["answer_entropy"].is_null()) {
      s.answer_entropy = j["answer_entropy"].get<double>();
    }
    s.error = j.value("error", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIntegrity, std::string("partition row: ") + e.what());
  }
  return s;
}

ordered_json to_json(const DisambiguationRecord& r) {
  ordered_json out;
  out["sample_id"] = r.sample_id;
  out["query"] = r.query;
  out["disambig"] = r.disambig;
  out["h_query"] = r.h_query;
  out["h_disambig"] = r.h_disambig;
  out["info_gain"] = r.info_gain;
  out["verdict"] = to_string(r.verdict);
  if (r.empty_disambiguation) out["empty_disambiguation"] = true;
  if (r.error) out["error"] = *r.error;
  return out;
}

DisambiguationRecord record_from_json(const json& j) {
  DisambiguationRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.query = j.at("query").get<std::string>();
    r.disambig = j.at("disambig").get<std::string>();
    r.h_query = j.at("h_query").get<double>();
    r.h_disambig = j.at("h_disambig").get<double>();
    r.info_gain = j.at("info_gain").get<double>();
    auto verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (!verdict) throw Error(ErrorKind::kIntegrity, "unknown verdict");
    r.verdict = *verdict;
    r.empty_disambiguation = j.value("empty_disambiguation", false);
    if (j.contains("error")) r.error = j["error"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIntegrity, std::string("record row: ") + e.what());
  }
  return r;
}

ordered_json to_json(const ClarifyLabel& l) {
  ordered_json out;
  out["sample_id"] = l.sample_id;
  out["text"] = l.text;
  out["kind"] = to_string(l.kind);
  if (l.fallback_fixed) out["fallback_fixed"] = true;
  return out;
}

ClarifyLabel label_from_json(const json& j) {
  ClarifyLabel l;
  try {
    l.sample_id = j.at("sample_id").get<std::string>();
    l.text = j.at("text").get<std::string>();
    auto kind = clarify_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::kIntegrity, "unknown clarify kind");
    l.kind = *kind;
    l.fallback_fixed = j.value("fallback_fixed", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIntegrity, std::string("label row: ") + e.what());
  }
  return l;
}

namespace {

template <class T>
void save_rows(const std::filesystem::path& path, const std::vector<T>& items) {
  std::vector<ordered_json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.push_back(to_json(item));
  io::write_file_atomic(path, io::to_jsonl(rows));
}

template <class T, class Fn>
std::vector<T> load_rows(const std::filesystem::path& path, Fn parse) {
  std::vector<T> out;
  io::read_jsonl(path, [&](const json& row, std::size_t line) {
    try {
      out.push_back(parse(row));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace

void save_partition(const std::filesystem::path& path, const StageOnePartition& p) {
  save_rows(path, p.all());
}

StageOnePartition load_partition(const std::filesystem::path& path) {
  StageOnePartition p;
  for (auto& s : load_rows<AssessedSample>(path, assessed_from_json)) {
    switch (s.status) {
      case SampleStatus::kCorrect: p.correct.push_back(std::move(s)); break;
      case SampleStatus::kIncorrect: p.incorrect.push_back(std::move(s)); break;
      case SampleStatus::kErrored: p.errored.push_back(std::move(s)); break;
    }
  }
  return p;
}

void save_records(const std::filesystem::path& path,
                  const std::vector<DisambiguationRecord>& records) {
  save_rows(path, records);
}

std::vector<DisambiguationRecord> load_records(const std::filesystem::path& path) {
  return load_rows<DisambiguationRecord>(path, record_from_json);
}

void save_labels(const std::filesystem::path& path, const std::vector<ClarifyLabel>& labels) {
  save_rows(path, labels);
}

std::vector<ClarifyLabel> load_labels(const std::filesystem::path& path) {
  return load_rows<ClarifyLabel>(path, label_from_json);
}

void save_selection(const std::filesystem::path& path, const Selection& selection) {
  std::vector<ordered_json> rows;
  for (const auto& [half, items] :
       {std::pair{"correct", &selection.correct}, std::pair{"ambig", &selection.ambiguous}}) {
    for (const auto& a : *items) {
      ordered_json row;
      row["half"] = half;
      row["assessed"] = to_json(a);
      rows.push_back(std::move(row));
    }
  }
  io::write_file_atomic(path, io::to_jsonl(rows));
}

Selection load_selection(const std::filesystem::path& path) {
  Selection out;
  io::read_jsonl(path, [&](const json& row, std::size_t line) {
    try {
      const auto half = row.at("half").get<std::string>();
      auto a = assessed_from_json(row.at("assessed"));
      if (half == "correct") {
        out.correct.push_back(std::move(a));
      } else if (half == "ambig") {
        out.ambiguous.push_back(std::move(a));
      } else {
        throw Error(ErrorKind::kIntegrity, "unknown half '" + half + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line, e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace apa
