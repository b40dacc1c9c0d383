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

#ifndef APA_SFT_HPP_
#define APA_SFT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apa/corpus.hpp"
#include "apa/pipeline.hpp"
#include "json.hpp"

namespace apa {

enum class SftSource { kCorrect, kAmbig };

// One (prompt, completion) training pair. See docs/sft_format.md.
struct SftRecord {
  std::string id;
  std::string prompt;
  std::string completion;
  SftSource source = SftSource::kCorrect;
  std::optional<ClarifyKind> clarify_kind;  // present iff source is ambig
};

nlohmann::ordered_json to_json(const SftRecord& r);

// Completion for a correct-half sample: the first gold answer, or the
// model's own clarification for gold-ambiguous samples it already handled.
std::string correct_completion(const AssessedSample& a);

std::vector<SftRecord> build_sft_records(const Selection& selection,
                                         const std::vector<ClarifyLabel>& labels,
                                         const PromptTemplate& direct,
                                         std::uint64_t seed);

// Writes the shuffled records as JSONL and returns n + m.
std::size_t emit(const Selection& selection, const std::vector<ClarifyLabel>& labels,
                 const PromptTemplate& direct, std::uint64_t seed,
                 const std::filesystem::path& path);

struct VerifyFailure {
  std::size_t line = 0;  // 0 for file-level failures
  std::string message;
};

struct VerifyReport {
  std::size_t records = 0;
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, std::size_t> per_clarify_kind;
  std::vector<VerifyFailure> failures;

  bool ok() const { return failures.empty(); }
};

nlohmann::ordered_json to_json(const VerifyReport& report);

// Re-parses an SFT file and re-checks every record invariant and the
// correct/ambig balance. `answer_cue` is the suffix every prompt must end with.
VerifyReport verify(const std::filesystem::path& path,
                    const std::string& answer_cue = "Answer:");

}  // namespace apa

#endif  // APA_SFT_HPP_
