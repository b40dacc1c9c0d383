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

#ifndef APA_CORPUS_HPP_
#define APA_CORPUS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "json.hpp"

namespace apa {

struct QASample {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::optional<bool> gold_ambiguous;
  std::string source;

  bool operator==(const QASample&) const = default;
};

nlohmann::ordered_json to_json(const QASample& sample);
// Throws kIntegrity when the record violates a sample invariant.
QASample sample_from_json(const nlohmann::json& record);

// Order-preserving JSONL load. Duplicate ids and invariant violations raise
// kIntegrity; malformed lines raise ParseError.
std::vector<QASample> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path,
                  const std::vector<QASample>& samples);

// Keeps samples whose id is listed (one id per line) in the allowlist file.
std::set<std::string> load_allowlist(const std::filesystem::path& path);
std::vector<QASample> filter_by_allowlist(const std::vector<QASample>& samples,
                                          const std::set<std::string>& ids);

// A prompt body with `{slot}` placeholders; every declared slot occurs
// exactly once.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body,
                 std::vector<std::string> slots);

  // Literal single-pass substitution; values are never re-scanned.
  std::string render(const std::map<std::string, std::string>& values) const;

  // Text after the final newline, e.g. "Answer:".
  std::string answer_cue() const;

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  const std::vector<std::string>& slots() const { return slots_; }

 private:
  std::string name_;
  std::string body_;
  std::vector<std::string> slots_;
};

namespace templates {
inline constexpr std::string_view kDirect = "direct";
inline constexpr std::string_view kDisambiguation = "disambiguation";
inline constexpr std::string_view kClarification = "clarification";
inline constexpr std::string_view kAmbiguityAware = "ambiguity_aware";
inline constexpr std::string_view kSelfAsk = "self_ask";
inline constexpr std::string_view kAmbiguation = "ambiguation";
inline constexpr std::string_view kAmbiguationValidation = "ambiguation_validation";
}  // namespace templates

class TemplateSet {
 public:
  static TemplateSet builtin();
  // Built-ins overridden by `<name>.txt` files present in `dir`.
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;
  const std::map<std::string, PromptTemplate, std::less<>>& all() const {
    return templates_;
  }
  // name -> sha256 of body, for run manifests.
  std::map<std::string, std::string> hashes() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct AmbiguationCandidate {
  std::string id;
  std::string original;
  std::string candidate;
  std::optional<std::string> discard_reason;
};

AmbiguationCandidate ambiguate(const QASample& sample, Backend& backend,
                               const TemplateSet& templates, int max_tokens = 64);

// True iff the greedy answer's first word is "yes", case-insensitively.
bool validate_ambiguation(std::string_view candidate, Backend& backend,
                          const TemplateSet& templates, int max_tokens = 8);
bool is_yes(std::string_view generation);

}  // namespace apa

#endif  // APA_CORPUS_HPP_
