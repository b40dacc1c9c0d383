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

#include "apa/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "apa/error.hpp"
#include "apa/io.hpp"
#include "apa/parallel.hpp"
#include "apa/seeding.hpp"
#include "apa/text.hpp"

namespace apa {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_fixed_clarification(std::string_view text) {
  return std::find(kFixedClarifications.begin(), kFixedClarifications.end(), text) !=
         kFixedClarifications.end();
}

std::vector<std::string> rouge_tokens(std::string_view s) {
  std::string cleaned = text::to_lower(s);
  for (char& c : cleaned) {
    if (std::ispunct(static_cast<unsigned char>(c))) c = ' ';
  }
  return text::split_whitespace(cleaned);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_pair(std::string_view prediction, std::string_view reference) {
  const auto pred = rouge_tokens(prediction);
  const auto ref = rouge_tokens(reference);
  if (pred.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(pred, ref));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(pred.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double rouge_l(std::string_view prediction, const std::vector<std::string>& references) {
  if (references.empty()) {
    throw Error(ErrorKind::kPrecondition, "rouge_l needs at least one reference");
  }
  double best = 0.0;
  for (const auto& ref : references) best = std::max(best, rouge_l_pair(prediction, ref));
  return best;
}

bool is_clarification(std::string_view text_in) {
  const std::string lowered = text::to_lower(text_in);
  return std::any_of(kClarificationPhrases.begin(), kClarificationPhrases.end(),
                     [&](std::string_view phrase) {
                       return lowered.find(phrase) != std::string::npos;
                     });
}

Outcome categorize(bool ambiguous, const std::vector<std::string>& answers,
                   std::string_view prediction, double threshold) {
  const bool clarified = is_clarification(prediction);
  if (ambiguous) return clarified ? Outcome::k1 : Outcome::k2;
  if (clarified) return Outcome::k5;
  if (answers.empty()) return Outcome::k4;
  return rouge_l(prediction, answers) > threshold ? Outcome::k3 : Outcome::k4;
}

Outcome categorize(const QASample& sample, std::string_view prediction,
                   double threshold) {
  if (!sample.gold_ambiguous) {
    throw Error(ErrorKind::kIntegrity,
                "sample '" + sample.id + "' has no gold ambiguity label");
  }
  return categorize(*sample.gold_ambiguous, sample.answers, prediction, threshold);
}

namespace {

PrecisionRecall harmonic(double p_num, double p_den, double r_num, double r_den) {
  PrecisionRecall out;
  out.precision = p_den > 0.0 ? p_num / p_den : 0.0;
  out.recall = r_den > 0.0 ? r_num / r_den : 0.0;
  const double sum = out.precision + out.recall;
  out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
  return out;
}

double d(std::int64_t v) { return static_cast<double>(v); }

}  // namespace

PrecisionRecall unambig_scores(const OutcomeCounts& c) {
  const double c2 = d(c[Outcome::k2]), c3 = d(c[Outcome::k3]),
               c4 = d(c[Outcome::k4]), c5 = d(c[Outcome::k5]);
  return harmonic(c3, c2 + c3 + c4, c3, c3 + c4 + c5);
}

PrecisionRecall ambig_scores(const OutcomeCounts& c) {
  const double c1 = d(c[Outcome::k1]), c2 = d(c[Outcome::k2]),
               c5 = d(c[Outcome::k5]);
  return harmonic(c1, c1 + c5, c1, c1 + c2);
}

double f1_unambig(const OutcomeCounts& counts) { return unambig_scores(counts).f1; }
double f1_ambig(const OutcomeCounts& counts) { return ambig_scores(counts).f1; }

std::optional<double> mcr(const std::map<std::string, Outcome>& before,
                          const std::map<std::string, Outcome>& after) {
  if (before.size() != after.size()) {
    throw Error(ErrorKind::kIntegrity, "MCR runs cover different sample counts");
  }
  std::size_t base = 0;
  std::size_t shifted = 0;
  for (const auto& [id, outcome] : before) {
    auto it = after.find(id);
    if (it == after.end()) {
      throw Error(ErrorKind::kIntegrity, "MCR: id '" + id + "' missing from after run");
    }
    if (outcome != Outcome::k3) continue;
    ++base;
    if (it->second == Outcome::k5) ++shifted;
  }
  if (base == 0) return std::nullopt;
  return static_cast<double>(shifted) / static_cast<double>(base);
}

ordered_json to_json(const Prediction& p) {
  ordered_json out;
  out["id"] = p.id;
  out["prediction"] = p.prediction;
  if (p.errored) {
    out["errored"] = true;
    out["error"] = p.error;
  }
  if (p.greedy) out["greedy"] = *p.greedy;
  if (p.consistency) out["consistency"] = *p.consistency;
  if (p.ambiguous_verdict) out["ambiguous"] = *p.ambiguous_verdict;
  if (p.flagged) out["flagged"] = true;
  return out;
}

Prediction prediction_from_json(const json& record) {
  if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
      !record.contains("prediction") || !record["prediction"].is_string()) {
    throw Error(ErrorKind::kParse,
                "prediction record needs string fields 'id' and 'prediction'");
  }
  Prediction p;
  p.id = record["id"].get<std::string>();
  p.prediction = record["prediction"].get<std::string>();
  try {
    p.errored = record.value("errored", false);
    p.error = record.value("error", std::string());
    if (record.contains("greedy")) p.greedy = record["greedy"].get<std::string>();
    if (record.contains("consistency")) {
      p.consistency = record["consistency"].get<double>();
    }
    if (record.contains("ambiguous")) {
      p.ambiguous_verdict = record["ambiguous"].get<bool>();
    }
    p.flagged = record.value("flagged", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("prediction record: ") + e.what());
  }
  return p;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  std::set<std::string> seen;
  io::read_jsonl(path, [&](const json& record, std::size_t line) {
    Prediction p;
    try {
      p = prediction_from_json(record);
    } catch (const Error& e) {
      throw ParseError(path.string(), line, e.what());
    }
    if (!seen.insert(p.id).second) {
      throw ParseError(path.string(), line, "duplicate id '" + p.id + "'");
    }
    out.push_back(std::move(p));
  });
  return out;
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<Prediction>& predictions) {
  std::vector<ordered_json> rows;
  rows.reserve(predictions.size());
  for (const auto& p : predictions) rows.push_back(to_json(p));
  io::write_file_atomic(path, io::to_jsonl(rows));
}

MetricsReport evaluate(const std::vector<QASample>& dataset,
                       const std::vector<Prediction>& predictions,
                       double threshold) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) by_id[p.id] = &p;
  std::set<std::string> dataset_ids;
  for (const auto& s : dataset) dataset_ids.insert(s.id);
  for (const auto& p : predictions) {
    if (!dataset_ids.contains(p.id)) {
      throw Error(ErrorKind::kIntegrity,
                  "prediction for unknown sample id '" + p.id + "'");
    }
  }

  MetricsReport report;
  report.config["rouge_threshold"] = threshold;
  for (const auto& sample : dataset) {
    auto it = by_id.find(sample.id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kIntegrity, "no prediction for sample '" + sample.id + "'");
    }
    const Prediction& p = *it->second;
    SampleScore score{sample.id, std::nullopt, 0.0, p.prediction};
    if (p.errored) {
      ++report.counts.errored;
    } else {
      score.category = categorize(sample, p.prediction, threshold);
      if (!sample.answers.empty()) score.rouge = rouge_l(p.prediction, sample.answers);
      report.counts.add(*score.category);
    }
    report.per_sample.push_back(std::move(score));
  }
  report.f1_u = f1_unambig(report.counts);
  report.f1_a = f1_ambig(report.counts);
  return report;
}

std::map<std::string, Outcome> outcome_map(const MetricsReport& report) {
  std::map<std::string, Outcome> out;
  for (const auto& s : report.per_sample) {
    if (s.category) out[s.id] = *s.category;
  }
  return out;
}

ordered_json to_json(const MetricsReport& report) {
  ordered_json out;
  ordered_json counts;
  for (int i = 0; i < 5; ++i) {
    counts["c" + std::to_string(i + 1)] = report.counts.c[static_cast<std::size_t>(i)];
  }
  counts["errored"] = report.counts.errored;
  out["counts"] = counts;
  out["f1_u"] = report.f1_u;
  out["f1_a"] = report.f1_a;
  if (report.mcr) out["mcr"] = *report.mcr;
  ordered_json per_sample = ordered_json::array();
  for (const auto& s : report.per_sample) {
    ordered_json row;
    row["id"] = s.id;
    row["category"] = s.category ? json(static_cast<int>(*s.category)) : json(nullptr);
    row["rouge"] = s.rouge;
    row["prediction"] = s.prediction;
    per_sample.push_back(std::move(row));
  }
  out["per_sample"] = std::move(per_sample);
  out["config"] = report.config;
  return out;
}

ordered_json aggregate_reports(const std::vector<json>& reports) {
  if (reports.empty()) throw Error(ErrorKind::kPrecondition, "no reports to aggregate");
  ordered_json out;
  out["reports"] = reports.size();
  for (const char* key : {"f1_u", "f1_a", "mcr"}) {
    std::vector<double> values;
    for (const auto& r : reports) {
      if (r.contains(key) && r[key].is_number()) values.push_back(r[key].get<double>());
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    out[key] = {{"mean", mean}, {"stddev", std::sqrt(var)}, {"n", values.size()}};
  }
  return out;
}

namespace {

std::vector<Prediction> run_greedy_template(const std::vector<QASample>& dataset,
                                            Backend& backend,
                                            const PromptTemplate& tmpl,
                                            const BaselineOptions& options) {
  std::vector<Prediction> out(dataset.size());
  parallel_for(dataset.size(), backend.parallelism(), [&](std::size_t i) {
    const auto& sample = dataset[i];
    Prediction& p = out[i];
    p.id = sample.id;
    try {
      const auto gen = backend.generate(tmpl.render({{"question", sample.question}}),
                                        GenerationParams::greedy(options.max_tokens));
      p.prediction = text::trim_generation(gen.text);
    } catch (const Error& e) {
      p.errored = true;
      p.error = e.what();
    }
  });
  return out;
}

}  // namespace

std::vector<Prediction> run_direct(const std::vector<QASample>& dataset,
                                   Backend& backend, const TemplateSet& templates,
                                   const BaselineOptions& options) {
  return run_greedy_template(dataset, backend, templates.get(templates::kDirect),
                             options);
}

std::vector<Prediction> run_ambig_aware(const std::vector<QASample>& dataset,
                                        Backend& backend,
                                        const TemplateSet& templates,
                                        const BaselineOptions& options) {
  return run_greedy_template(dataset, backend,
                             templates.get(templates::kAmbiguityAware), options);
}

double sample_consistency(std::string_view greedy,
                          const std::vector<std::string>& samples) {
  if (samples.empty()) {
    throw Error(ErrorKind::kPrecondition, "sample rep needs at least one sample");
  }
  const std::string target = text::to_lower(text::trim(greedy));
  std::size_t matches = 0;
  for (const auto& s : samples) {
    if (text::to_lower(text::trim(s)) == target) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(samples.size());
}

std::vector<Prediction> apply_consistency_threshold(
    const std::vector<Prediction>& sampled, double threshold,
    std::string_view clarification) {
  std::vector<Prediction> out = sampled;
  for (auto& p : out) {
    if (p.errored || !p.consistency) continue;
    const bool ambiguous = *p.consistency < threshold;
    p.ambiguous_verdict = ambiguous;
    p.prediction = ambiguous ? std::string(clarification) : p.greedy.value_or("");
  }
  return out;
}

std::vector<Prediction> run_sample_rep(const std::vector<QASample>& dataset,
                                       Backend& backend,
                                       const TemplateSet& templates,
                                       const BaselineOptions& options) {
  if (options.samples < 1) {
    throw Error(ErrorKind::kPrecondition, "sample rep needs k >= 1");
  }
  const auto& tmpl = templates.get(templates::kDirect);
  std::vector<Prediction> out(dataset.size());
  parallel_for(dataset.size(), backend.parallelism(), [&](std::size_t i) {
    const auto& sample = dataset[i];
    Prediction& p = out[i];
    p.id = sample.id;
    try {
      const auto prompt = tmpl.render({{"question", sample.question}});
      const auto greedy =
          text::trim_generation(
              backend.generate(prompt, GenerationParams::greedy(options.max_tokens))
                  .text);
      std::vector<std::string> draws;
      for (int j = 0; j < options.samples; ++j) {
        GenerationParams params;
        params.max_tokens = options.max_tokens;
        params.temperature = options.temperature;
        params.seed = derive_seed(options.seed, "sample_rep",
                                  sample.id + "#" + std::to_string(j));
        draws.push_back(text::trim_generation(backend.generate(prompt, params).text));
      }
      p.greedy = greedy;
      p.consistency = sample_consistency(greedy, draws);
    } catch (const Error& e) {
      p.errored = true;
      p.error = e.what();
    }
  });
  return apply_consistency_threshold(out, options.consistency_threshold,
                                     options.clarification);
}

SelfAskVerdict parse_self_ask(std::string_view verifier_output) {
  const auto word = text::first_word(text::trim_generation(verifier_output));
  if (word == "ambiguous") return {true, false};
  if (word == "unambiguous") return {false, false};
  return {false, true};
}

std::vector<Prediction> run_self_ask(const std::vector<QASample>& dataset,
                                     Backend& backend, const TemplateSet& templates,
                                     const BaselineOptions& options) {
  const auto& direct = templates.get(templates::kDirect);
  const auto& verify = templates.get(templates::kSelfAsk);
  std::vector<Prediction> out(dataset.size());
  parallel_for(dataset.size(), backend.parallelism(), [&](std::size_t i) {
    const auto& sample = dataset[i];
    Prediction& p = out[i];
    p.id = sample.id;
    try {
      const auto answer = text::trim_generation(
          backend
              .generate(direct.render({{"question", sample.question}}),
                        GenerationParams::greedy(options.max_tokens))
              .text);
      const auto verdict_text =
          backend
              .generate(verify.render({{"question", sample.question}, {"answer", answer}}),
                        GenerationParams::greedy(options.max_tokens))
              .text;
      const auto verdict = parse_self_ask(verdict_text);
      p.greedy = answer;
      p.ambiguous_verdict = verdict.ambiguous;
      p.flagged = verdict.flagged;
      p.prediction = verdict.ambiguous ? options.clarification : answer;
    } catch (const Error& e) {
      p.errored = true;
      p.error = e.what();
    }
  });
  return out;
}

ThresholdSweep sweep_consistency_thresholds(const std::vector<QASample>& dataset,
                                            const std::vector<Prediction>& sampled,
                                            const std::vector<double>& thresholds,
                                            double rouge_threshold) {
  if (thresholds.empty()) throw Error(ErrorKind::kPrecondition, "no thresholds given");
  ThresholdSweep sweep;
  double best_score = -1.0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto report = evaluate(
        dataset, apply_consistency_threshold(sampled, thresholds[i]), rouge_threshold);
    sweep.rows.push_back({thresholds[i], report.f1_u, report.f1_a});
    const double score = (report.f1_u + report.f1_a) / 2.0;
    if (score > best_score) {
      best_score = score;
      sweep.best = i;
    }
  }
  return sweep;
}

}  // namespace apa
