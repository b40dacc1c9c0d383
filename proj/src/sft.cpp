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

#include "apa/sft.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "apa/error.hpp"
#include "apa/evalkit.hpp"
#include "apa/io.hpp"
#include "apa/seeding.hpp"

namespace apa {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const SftRecord& r) {
  ordered_json out;
  out["id"] = r.id;
  out["prompt"] = r.prompt;
  out["completion"] = r.completion;
  out["source"] = r.source == SftSource::kCorrect ? "correct" : "ambig";
  if (r.clarify_kind) out["clarify_kind"] = to_string(*r.clarify_kind);
  return out;
}

std::string correct_completion(const AssessedSample& a) {
  if (a.sample.gold_ambiguous.value_or(false) || a.sample.answers.empty()) {
    return a.model_answer;
  }
  return a.sample.answers.front();
}

std::vector<SftRecord> build_sft_records(const Selection& selection,
                                         const std::vector<ClarifyLabel>& labels,
                                         const PromptTemplate& direct,
                                         std::uint64_t seed) {
  if (selection.correct.size() != selection.ambiguous.size()) {
    throw Error(ErrorKind::kIntegrity,
                "halves are not balanced: " + std::to_string(selection.correct.size()) +
                    " correct vs " + std::to_string(selection.ambiguous.size()) +
                    " ambiguous");
  }
  std::map<std::string, const ClarifyLabel*> label_by_id;
  for (const auto& l : labels) label_by_id[l.sample_id] = &l;

  std::vector<SftRecord> records;
  records.reserve(selection.correct.size() * 2);
  for (const auto& a : selection.correct) {
    SftRecord r;
    r.id = a.sample.id;
    r.prompt = direct.render({{"question", a.sample.question}});
    r.completion = correct_completion(a);
    if (r.completion.empty()) {
      throw Error(ErrorKind::kIntegrity,
                  "correct sample '" + r.id + "' has no usable completion");
    }
    r.source = SftSource::kCorrect;
    records.push_back(std::move(r));
  }
  for (const auto& a : selection.ambiguous) {
    auto it = label_by_id.find(a.sample.id);
    if (it == label_by_id.end()) {
      throw Error(ErrorKind::kIntegrity,
                  "ambiguous sample '" + a.sample.id + "' has no clarification label");
    }
    SftRecord r;
    r.id = a.sample.id;
    r.prompt = direct.render({{"question", a.sample.question}});
    r.completion = it->second->text;
    r.source = SftSource::kAmbig;
    r.clarify_kind = it->second->kind;
    records.push_back(std::move(r));
  }
  // Stable shuffle keyed on (seed, source, id).
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    keyed.emplace_back(
        derive_seed(seed, "sft_order",
                    (r.source == SftSource::kCorrect ? "c:" : "a:") + r.id),
        i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<SftRecord> shuffled;
  shuffled.reserve(records.size());
  for (const auto& [key, idx] : keyed) shuffled.push_back(std::move(records[idx]));
  return shuffled;
}

std::size_t emit(const Selection& selection, const std::vector<ClarifyLabel>& labels,
                 const PromptTemplate& direct, std::uint64_t seed,
                 const std::filesystem::path& path) {
  const auto records = build_sft_records(selection, labels, direct, seed);
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  io::write_file_atomic(path, io::to_jsonl(rows));
  return records.size();
}

ordered_json to_json(const VerifyReport& report) {
  ordered_json out;
  out["ok"] = report.ok();
  out["records"] = report.records;
  out["per_source"] = report.per_source;
  out["per_clarify_kind"] = report.per_clarify_kind;
  ordered_json failures = ordered_json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"line", f.line}, {"message", f.message}});
  }
  out["failures"] = std::move(failures);
  return out;
}

VerifyReport verify(const std::filesystem::path& path, const std::string& answer_cue) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open " + path.string());

  VerifyReport report;
  report.per_source = {{"correct", 0}, {"ambig", 0}};
  auto fail = [&](std::size_t line, std::string msg) {
    report.failures.push_back({line, std::move(msg)});
  };
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) {
      fail(number, "blank line");
      continue;
    }
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      fail(number, std::string("not JSON: ") + e.what());
      continue;
    }
    ++report.records;
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!row.is_object() || !row.contains(key) || !row[key].is_string()) {
        return std::nullopt;
      }
      return row[key].get<std::string>();
    };
    const auto id = str("id");
    const auto prompt = str("prompt");
    const auto completion = str("completion");
    const auto source = str("source");
    if (!id || id->empty()) fail(number, "missing id");
    if (!prompt) {
      fail(number, "missing prompt");
    } else if (!prompt->ends_with(answer_cue)) {
      fail(number, "prompt does not end with '" + answer_cue + "'");
    }
    if (!completion || completion->empty()) fail(number, "empty completion");
    if (!source || (*source != "correct" && *source != "ambig")) {
      fail(number, "source must be 'correct' or 'ambig'");
      continue;
    }
    ++report.per_source[*source];
    if (id && !seen.insert(*source + ":" + *id).second) {
      fail(number, "duplicate id '" + *id + "' within source " + *source);
    }
    const bool has_kind = row.contains("clarify_kind");
    if (*source == "ambig") {
      const auto kind = str("clarify_kind");
      if (!kind || !clarify_kind_from_string(*kind)) {
        fail(number, "ambig record needs clarify_kind fixed|generated");
        continue;
      }
      ++report.per_clarify_kind[*kind];
      if (*kind == "fixed" && completion && !is_fixed_clarification(*completion)) {
        fail(number, "fixed completion is not a canonical clarification");
      }
    } else if (has_kind) {
      fail(number, "correct record must not carry clarify_kind");
    }
  }
  if (report.per_source["correct"] != report.per_source["ambig"]) {
    fail(0, "unbalanced: " + std::to_string(report.per_source["correct"]) +
                " correct vs " + std::to_string(report.per_source["ambig"]) + " ambig");
  }
  return report;
}

}  // namespace apa
