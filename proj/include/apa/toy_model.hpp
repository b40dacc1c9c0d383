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

#ifndef APA_TOY_MODEL_HPP_
#define APA_TOY_MODEL_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apa/backend.hpp"
#include "json.hpp"

namespace apa {

// Fixed n-gram language model over an explicit vocabulary. Contexts missing
// from the table fall back to the uniform distribution. See
// docs/toy_model_format.md for the fixture layout.
class NgramTable {
 public:
  static constexpr double kSumTolerance = 1e-12;

  NgramTable(std::vector<std::string> vocabulary, int order,
             std::string begin_marker, std::string end_marker,
             std::optional<std::string> unk_token = std::nullopt);

  static NgramTable from_json(const nlohmann::json& doc);
  static NgramTable load(const std::filesystem::path& path);

  // Sets the distribution for an (order-1)-token context. Validates length,
  // vocabulary membership, non-negativity and the unit sum.
  void set_distribution(const std::vector<std::string>& context,
                        std::vector<double> probs);

  // Exact next-token vector for a token history. Only the last order-1
  // tokens are used; shorter histories are padded with the begin marker.
  std::vector<double> next_distribution(
      std::span<const std::string> context) const;
  const std::vector<double>& next_distribution_ids(
      std::span<const std::size_t> history) const;

  // Throws kVocabulary naming the token unless an unk token is configured.
  std::size_t token_id(std::string_view token) const;
  std::optional<std::size_t> find(std::string_view token) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  std::size_t vocab_size() const { return vocabulary_.size(); }
  int order() const { return order_; }
  std::size_t begin_id() const { return begin_id_; }
  std::size_t end_id() const { return end_id_; }
  std::size_t context_count() const { return table_.size(); }

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t, std::less<>> index_;
  int order_;
  std::size_t begin_id_;
  std::size_t end_id_;
  std::optional<std::size_t> unk_id_;
  std::map<std::vector<std::size_t>, std::vector<double>> table_;
  std::vector<double> uniform_;
};

// Backend that answers generate/score by exact table arithmetic.
class ToyBackend : public Backend {
 public:
  ToyBackend(std::shared_ptr<const NgramTable> table, int top_k,
             int parallelism = 1);

  GenerationResult generate(std::string_view prompt,
                            const GenerationParams& params) override;
  ScoringResult score(std::string_view text, std::string_view context) override;
  int parallelism() const override { return parallelism_; }
  int top_k() const override { return top_k_; }

  const NgramTable& table() const { return *table_; }

  // Builds the reported distribution for one position.
  TokenDistribution describe(const std::vector<double>& probs,
                             std::size_t realized, bool leading_space) const;

 private:
  std::vector<std::size_t> history_for(std::string_view prompt) const;

  std::shared_ptr<const NgramTable> table_;
  int top_k_;
  int parallelism_;
};

std::unique_ptr<Backend> as_backend(std::shared_ptr<const NgramTable> table,
                                    int top_k, int parallelism = 1);

}  // namespace apa

#endif  // APA_TOY_MODEL_HPP_
