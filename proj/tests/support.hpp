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

// Shared helpers for the unit and acceptance tests.

#ifndef APA_TESTS_SUPPORT_HPP_
#define APA_TESTS_SUPPORT_HPP_

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "apa/backend.hpp"
#include "apa/error.hpp"
#include "apa/text.hpp"

namespace apa::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(APA_SOURCE_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("apa_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Full distribution over anonymous tokens, realized token first.
inline TokenDistribution full_dist(const std::vector<double>& probs, std::size_t realized = 0) {
  TokenDistribution d;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    d.top_alternatives.push_back({"t" + std::to_string(i), std::log(probs[i])});
  }
  d.token_text = "t" + std::to_string(realized);
  d.token_logprob = std::log(probs[realized]);
  d.tail_mass = 0.0;
  return d;
}

inline TokenDistribution one_hot(const std::string& token) {
  TokenDistribution d;
  d.token_text = token;
  d.token_logprob = 0.0;
  d.top_alternatives = {{token, 0.0}};
  return d;
}

// Backend with canned answers: generation returns the text of the longest
// rule whose needle occurs in the prompt; scoring returns registered
// profiles or one-hot tokens.
class ScriptedBackend : public Backend {
 public:
  using Rule = std::pair<std::string, std::string>;  // prompt substring -> text

  void on_prompt(std::string needle, std::string text) {
    rules_.emplace_back(std::move(needle), std::move(text));
  }
  void on_score(std::string text, std::vector<TokenDistribution> tokens) {
    scores_[std::move(text)] = std::move(tokens);
  }
  void fail_on(std::string needle, ErrorKind kind) {
    failures_.emplace_back(std::move(needle), kind);
  }
  // Sampled generations (temperature > 0) cycle through this list per prompt.
  void on_sample(std::string needle, std::vector<std::string> texts) {
    samples_.emplace_back(std::move(needle), std::move(texts));
  }
  std::string fallback = "unknown";

  GenerationResult generate(std::string_view prompt, const GenerationParams& params) override {
    ++generate_calls;
    for (const auto& [needle, kind] : failures_) {
      if (prompt.find(needle) != std::string_view::npos) throw Error(kind, "scripted failure");
    }
    GenerationResult out;
    if (params.temperature > 0.0) {
      for (const auto& [needle, texts] : samples_) {
        if (prompt.find(needle) == std::string_view::npos) continue;
        std::lock_guard lock(mu_);
        auto& i = cursor_[needle];
        out.text = texts[i++ % texts.size()];
        return with_tokens(out);
      }
    }
    // Longest matching needle wins so rules can be specific.
    const Rule* best = nullptr;
    for (const auto& rule : rules_) {
      if (prompt.find(rule.first) != std::string_view::npos &&
          (!best || rule.first.size() > best->first.size())) {
        best = &rule;
      }
    }
    out.text = best ? best->second : fallback;
    return with_tokens(out);
  }

  ScoringResult score(std::string_view text, std::string_view) override {
    ++score_calls;
    for (const auto& [needle, kind] : failures_) {
      if (text.find(needle) != std::string_view::npos) throw Error(kind, "scripted failure");
    }
    ScoringResult out;
    if (auto it = scores_.find(std::string(text)); it != scores_.end()) {
      out.tokens = it->second;
      return out;
    }
    for (const auto& tok : text::split_whitespace(text)) out.tokens.push_back(one_hot(tok));
    return out;
  }

  int top_k() const override { return 5; }
  int parallelism() const override { return 3; }

  std::atomic<int> generate_calls{0};
  std::atomic<int> score_calls{0};

 private:
  static GenerationResult with_tokens(GenerationResult r) {
    for (const auto& tok : text::split_whitespace(r.text)) r.tokens.push_back(one_hot(tok));
    return r;
  }

  std::vector<Rule> rules_;
  std::vector<std::pair<std::string, ErrorKind>> failures_;
  std::vector<std::pair<std::string, std::vector<std::string>>> samples_;
  std::map<std::string, std::vector<TokenDistribution>> scores_;
  std::map<std::string, std::size_t> cursor_;
  std::mutex mu_;
};

}  // namespace apa::testing

#endif  // APA_TESTS_SUPPORT_HPP_
