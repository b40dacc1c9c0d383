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

#include "apa/corpus.hpp"

#include <fstream>

#include "apa/error.hpp"
#include "apa/io.hpp"
#include "apa/text.hpp"

namespace apa {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const QASample& sample) {
  ordered_json out;
  out["id"] = sample.id;
  out["question"] = sample.question;
  out["answers"] = sample.answers;
  if (sample.gold_ambiguous) out["ambiguous"] = *sample.gold_ambiguous;
  out["source"] = sample.source;
  return out;
}

QASample sample_from_json(const json& record) {
  if (!record.is_object()) {
    throw Error(ErrorKind::kIntegrity, "sample record is not an object");
  }
  QASample s;
  try {
    s.id = record.at("id").get<std::string>();
    s.question = record.at("question").get<std::string>();
    if (record.contains("answers") && !record["answers"].is_null()) {
      s.answers = record["answers"].get<std::vector<std::string>>();
    }
    if (record.contains("ambiguous") && !record["ambiguous"].is_null()) {
      s.gold_ambiguous = record["ambiguous"].get<bool>();
    }
    s.source = record.value("source", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIntegrity, std::string("bad sample fields: ") + e.what());
  }
  if (s.id.empty()) throw Error(ErrorKind::kIntegrity, "sample id is empty");
  if (text::trim(s.question).empty()) {
    throw Error(ErrorKind::kIntegrity, "sample '" + s.id + "' has an empty question");
  }
  if (s.gold_ambiguous == false && s.answers.empty()) {
    throw Error(ErrorKind::kIntegrity,
                "unambiguous sample '" + s.id + "' has no gold answers");
  }
  return s;
}

std::vector<QASample> load_dataset(const std::filesystem::path& path) {
  std::vector<QASample> samples;
  std::set<std::string> seen;
  io::read_jsonl(path, [&](const json& record, std::size_t line) {
    QASample s;
    try {
      s = sample_from_json(record);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " +
                                e.what());
    }
    if (!seen.insert(s.id).second) {
      throw Error(ErrorKind::kIntegrity, path.string() + ":" +
                                             std::to_string(line) +
                                             ": duplicate id '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<QASample>& samples) {
  std::vector<ordered_json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(to_json(s));
  io::write_file_atomic(path, io::to_jsonl(rows));
}

std::set<std::string> load_allowlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open allowlist " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto id = text::trim(line);
    if (!id.empty()) ids.insert(std::move(id));
  }
  return ids;
}

std::vector<QASample> filter_by_allowlist(const std::vector<QASample>& samples,
                                          const std::set<std::string>& ids) {
  std::vector<QASample> out;
  for (const auto& s : samples) {
    if (ids.contains(s.id)) out.push_back(s);
  }
  return out;
}

PromptTemplate::PromptTemplate(std::string name, std::string body,
                               std::vector<std::string> slots)
    : name_(std::move(name)), body_(std::move(body)), slots_(std::move(slots)) {
  for (const auto& slot : slots_) {
    const std::string marker = "{" + slot + "}";
    auto first = body_.find(marker);
    if (first == std::string::npos) {
      throw Error(ErrorKind::kTemplate,
                  "template '" + name_ + "' is missing slot " + marker);
    }
    if (body_.find(marker, first + 1) != std::string::npos) {
      throw Error(ErrorKind::kTemplate,
                  "template '" + name_ + "' repeats slot " + marker);
    }
  }
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
  for (const auto& slot : slots_) {
    if (!values.contains(slot)) {
      throw Error(ErrorKind::kTemplate,
                  "template '" + name_ + "' needs slot '" + slot + "'");
    }
  }
  std::string out;
  out.reserve(body_.size() + 64);
  std::size_t pos = 0;
  while (pos < body_.size()) {
    bool replaced = false;
    if (body_[pos] == '{') {
      for (const auto& slot : slots_) {
        const std::size_t len = slot.size() + 2;
        if (body_.compare(pos, len, "{" + slot + "}") == 0) {
          out += values.at(slot);
          pos += len;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += body_[pos++];
  }
  return out;
}

std::string PromptTemplate::answer_cue() const {
  auto nl = body_.rfind('\n');
  return nl == std::string::npos ? body_ : body_.substr(nl + 1);
}

namespace {

struct BuiltinTemplate {
  std::string_view name;
  std::string_view body;
  std::vector<std::string> slots;
};

const std::vector<BuiltinTemplate>& builtin_templates() {
  static const std::vector<BuiltinTemplate> kTemplates = {
      {templates::kDirect,
       "Answer the following question.\n"
       "Question: {question}\n"
       "Answer:",
       {"question"}},
      {templates::kDisambiguation,
       "Evaluate the clarity of the input question.\n"
       "If the question is ambiguous, enhance it by adding specific details "
       "such as relevant locations, time periods, or additional context needed "
       "to resolve the ambiguity.\n"
       "For clear questions, simply repeat the query as is.\n"
       "\n"
       "Example:\n"
       "Input Question: When did the Frozen ride open at Epcot?\n"
       "Disambiguation: When did the Frozen ride open at Epcot?\n"
       "\n"
       "Input Question: What is the legal age of marriage in the USA?\n"
       "Disambiguation: What is the legal age of marriage in each state of the "
       "USA, excluding exceptions for parental consent?\n"
       "\n"
       "Input Question: {question}\n"
       "Disambiguation:",
       {"question"}},
      {templates::kClarification,
       "Engage with the provided ambiguous question by extracting the key point "
       "of ambiguity, and interactively ask for clarification based on the "
       "disambiguated question.\n"
       "\n"
       "Example 1:\n"
       "Ambiguous Question: Who won?\n"
       "Disambiguation: Who won the 2020 U.S. presidential election?\n"
       "Clarification Request: Your question seems ambiguous. Could you specify "
       "which competition or event you are asking about?\n"
       "\n"
       "Example 2:\n"
       "Ambiguous Question: What’s the weather like?\n"
       "Disambiguation: What’s the weather like in Miami today?\n"
       "Clarification Request: Your question is ambiguous. Where are you "
       "interested in the weather report for?\n"
       "\n"
       "Ambiguous Question: {question}\n"
       "Disambiguation: {disambiguation}\n"
       "Clarification Request:",
       {"question", "disambiguation"}},
      {templates::kAmbiguityAware,
       "Answer the following question. If the question is ambiguous, it is "
       "proper to answer with \"The question is ambiguous\".\n"
       "Question: {question}\n"
       "Answer:",
       {"question"}},
      {templates::kSelfAsk,
       "Answer the following question. Given the question and answer, is the "
       "question ambiguous or unambiguous? Answer only ambiguous or "
       "unambiguous.\n"
       "Question: {question}\n"
       "Answer: {answer}\n"
       "\n"
       "Is the question ambiguous or unambiguous? Answer only ambiguous or "
       "unambiguous.\n"
       "Ambiguous or Unambiguous:",
       {"question", "answer"}},
      {templates::kAmbiguation,
       "Please make the following question ambiguous. Your task is to introduce "
       "ambiguity by altering the specificity of the noun phrase or omitting "
       "crucial details from the statement. Keep the rest of the sentence "
       "unchanged except for the modified sections. Generate only the revised "
       "statement.\n"
       "\n"
       "Question: {question}\n"
       "Ambiguation:",
       {"question"}},
      {templates::kAmbiguationValidation,
       "An ambiguous question has multiple valid answers. Is the following "
       "question ambiguous with multiple possible answers? Answer only in Yes "
       "or No.\n"
       "\n"
       "Question: {question}\n"
       "\n"
       "Yes or No:",
       {"question"}},
  };
  return kTemplates;
}

}  // namespace

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  for (const auto& t : builtin_templates()) {
    set.templates_.emplace(std::string(t.name),
                           PromptTemplate(std::string(t.name), std::string(t.body),
                                          t.slots));
  }
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kConfig, "template directory not found: " + dir.string());
  }
  TemplateSet set = builtin();
  for (const auto& t : builtin_templates()) {
    const auto file = dir / (std::string(t.name) + ".txt");
    if (!std::filesystem::exists(file)) continue;
    std::string body = io::read_file(file);
    // Asset files end with one newline that is not part of the prompt.
    if (!body.empty() && body.back() == '\n') body.pop_back();
    set.templates_.erase(std::string(t.name));
    set.templates_.emplace(std::string(t.name),
                           PromptTemplate(std::string(t.name), std::move(body),
                                          t.slots));
  }
  return set;
}

const PromptTemplate& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw Error(ErrorKind::kTemplate, "unknown template '" + std::string(name) + "'");
  }
  return it->second;
}

std::map<std::string, std::string> TemplateSet::hashes() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, tmpl] : templates_) out[name] = io::sha256_hex(tmpl.body());
  return out;
}

AmbiguationCandidate ambiguate(const QASample& sample, Backend& backend,
                               const TemplateSet& templates, int max_tokens) {
  if (text::trim(sample.question).empty()) {
    throw Error(ErrorKind::kPrecondition, "cannot ambiguate an empty question");
  }
  const auto prompt =
      templates.get(templates::kAmbiguation).render({{"question", sample.question}});
  const auto gen = backend.generate(prompt, GenerationParams::greedy(max_tokens));
  AmbiguationCandidate out{sample.id, sample.question,
                           text::trim_generation(gen.text), std::nullopt};
  if (out.candidate.empty()) out.discard_reason = "empty_generation";
  return out;
}

bool is_yes(std::string_view generation) { return text::first_word(generation) == "yes"; }

bool validate_ambiguation(std::string_view candidate, Backend& backend,
                          const TemplateSet& templates, int max_tokens) {
  if (text::trim(candidate).empty()) {
    throw Error(ErrorKind::kPrecondition, "cannot validate an empty candidate");
  }
  const auto prompt = templates.get(templates::kAmbiguationValidation)
                          .render({{"question", std::string(candidate)}});
  const auto gen = backend.generate(prompt, GenerationParams::greedy(max_tokens));
  return is_yes(text::trim_generation(gen.text));
}

}  // namespace apa
