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

#ifndef APA_HTTP_BACKEND_HPP_
#define APA_HTTP_BACKEND_HPP_

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "json.hpp"

namespace apa {

struct HttpBackendConfig {
  // Full completions URL, e.g. http://127.0.0.1:8000/v1/completions.
  std::string endpoint;
  std::string model;
  std::string api_key;  // sent as a bearer token when non-empty
  int top_k = 5;
  int parallelism = 4;
  int max_attempts = 3;
  std::chrono::milliseconds retry_base{500};
  std::chrono::seconds timeout{120};
};

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 0;
  double temperature = 0.0;
  int logprobs = 5;
  bool echo = false;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
};

nlohmann::json to_wire(const CompletionRequest& request, const std::string& model);

// One position of a completions-style logprobs block.
struct WireToken {
  std::string text;
  std::optional<double> logprob;
  std::optional<std::vector<TokenAlternative>> top;  // absent when null
  std::size_t offset = 0;  // byte offset into prompt + completion
};

struct WireCompletion {
  std::string text;
  std::string finish_reason;
  std::vector<WireToken> tokens;
};

// Parses {choices:[{text, finish_reason, logprobs:{tokens, token_logprobs,
// top_logprobs, text_offset?}}]}. Throws ProtocolError on malformed bodies and
// kCapability when the logprob fields are missing entirely.
WireCompletion parse_completion(std::string_view body);

// Builds a normalized TokenDistribution keeping at most k alternatives; the
// realized token is forced into the list when it beats the k-th entry.
TokenDistribution make_distribution(const WireToken& token, int k);

// Client for an HTTP JSON completions endpoint.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  GenerationResult generate(std::string_view prompt,
                            const GenerationParams& params) override;
  ScoringResult score(std::string_view text, std::string_view context) override;
  int parallelism() const override { return config_.parallelism; }
  int top_k() const override { return config_.top_k; }

  const HttpBackendConfig& config() const { return config_; }

 private:
  std::string post(const nlohmann::json& body);

  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

}  // namespace apa

#endif  // APA_HTTP_BACKEND_HPP_
