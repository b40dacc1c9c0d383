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

#ifndef APA_BACKEND_HPP_
#define APA_BACKEND_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace apa {

struct GenerationParams {
  int max_tokens = 64;
  double temperature = 0.0;  // 0 selects greedy decoding
  int top_k_logprobs = 5;
  std::vector<std::string> stop_sequences;
  std::uint64_t seed = 0;

  static GenerationParams greedy(int max_tokens = 64) {
    GenerationParams p;
    p.max_tokens = max_tokens;
    return p;
  }

  // Throws kPrecondition when temperature < 0 or top_k_logprobs < 1.
  void validate() const;
};

struct TokenAlternative {
  std::string token_text;
  double logprob = 0.0;  // nats

  bool operator==(const TokenAlternative&) const = default;
};

// Next-token probability information at one position: the realized token,
// the top-k alternatives and the probability mass not covered by them.
struct TokenDistribution {
  std::string token_text;
  double token_logprob = 0.0;
  std::vector<TokenAlternative> top_alternatives;
  double tail_mass = 0.0;

  // exp-sum of the alternatives plus tail must be 1 within this tolerance.
  static constexpr double kNormalizationTolerance = 1e-6;

  double listed_mass() const;
  bool is_normalized() const;

  bool operator==(const TokenDistribution&) const = default;
};

enum class FinishReason { kStop, kLength, kError };

const char* to_string(FinishReason reason);

struct GenerationResult {
  std::string text;
  std::vector<TokenDistribution> tokens;
  FinishReason finish_reason = FinishReason::kStop;
};

struct ScoringResult {
  std::vector<TokenDistribution> tokens;

  std::size_t token_count() const { return tokens.size(); }
};

// Text generation and teacher-forced scoring over a language model.
// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationResult generate(std::string_view prompt,
                                    const GenerationParams& params) = 0;

  // One distribution per token of `text`; positions belonging to `context`
  // are dropped. `context` may be empty.
  virtual ScoringResult score(std::string_view text,
                              std::string_view context) = 0;

  // Upper bound on in-flight requests the caller should issue.
  virtual int parallelism() const { return 1; }

  // Number of alternatives returned per position.
  virtual int top_k() const = 0;
};

}  // namespace apa

#endif  // APA_BACKEND_HPP_
