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

#ifndef APA_UNCERTAINTY_HPP_
#define APA_UNCERTAINTY_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"

namespace apa {

// How a top-k distribution is completed before taking its entropy.
//   kTailLump:    the uncovered tail mass counts as one extra atom.
//   kRenormalize: the listed alternatives are rescaled to sum to one.
//   kExact:       the tail must be empty (full-vocabulary backends only).
enum class TruncationMode { kTailLump, kRenormalize, kExact };

const char* to_string(TruncationMode mode);
std::optional<TruncationMode> truncation_mode_from_string(std::string_view name);

inline constexpr double kDefaultEpsilon = 0.1;
inline constexpr double kExactTailTolerance = 1e-9;

// Entropy in nats of one position; 0 * log 0 is taken as 0.
double token_entropy(const TokenDistribution& dist,
                     TruncationMode mode = TruncationMode::kTailLump);

struct EntropyProfile {
  std::vector<double> per_token_entropy;
  double average_entropy = 0.0;
  TruncationMode truncation_mode = TruncationMode::kTailLump;

  std::size_t token_count() const { return per_token_entropy.size(); }
};

EntropyProfile entropy_profile(const ScoringResult& scoring,
                               TruncationMode mode = TruncationMode::kTailLump);

// Mean of per-token entropies; throws kEmptyInput on an empty list.
double average_entropy(const std::vector<TokenDistribution>& tokens,
                       TruncationMode mode);

// Average entropy of `text` scored with an empty prefix.
EntropyProfile sentence_entropy(Backend& backend, std::string_view text,
                                TruncationMode mode);

// H(query) - H(disambiguation). Not clamped. Throws kConfig on mode mismatch.
double info_gain(const EntropyProfile& query, const EntropyProfile& disambig);

enum class Verdict { kPerceivedAmbiguous, kPerceivedUnambiguous };

const char* to_string(Verdict verdict);
std::optional<Verdict> verdict_from_string(std::string_view name);

// Ambiguous iff gain > epsilon, strictly.
Verdict classify(double gain, double epsilon = kDefaultEpsilon);

struct InfoGainReport {
  double h_query = 0.0;
  double h_disambig = 0.0;
  double info_gain = 0.0;
  double epsilon = kDefaultEpsilon;
  Verdict verdict = Verdict::kPerceivedUnambiguous;
};

InfoGainReport make_report(const EntropyProfile& query,
                           const EntropyProfile& disambig, double epsilon);

}  // namespace apa

#endif  // APA_UNCERTAINTY_HPP_
