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

#include "apa/toy_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "apa/error.hpp"

namespace apa {

using nlohmann::json;

NgramTable::NgramTable(std::vector<std::string> vocabulary, int order,
                       std::string begin_marker, std::string end_marker,
                       std::optional<std::string> unk_token)
    : vocabulary_(std::move(vocabulary)), order_(order) {
  if (order_ < 1) throw Error(ErrorKind::kConfig, "n-gram order must be >= 1");
  if (vocabulary_.empty()) throw Error(ErrorKind::kConfig, "empty vocabulary");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    const auto& tok = vocabulary_[i];
    if (tok.empty() || std::any_of(tok.begin(), tok.end(), [](char c) {
          return std::isspace(static_cast<unsigned char>(c)) != 0;
        })) {
      throw Error(ErrorKind::kConfig,
                  "vocabulary token must be non-empty without whitespace: '" +
                      tok + "'");
    }
    if (!index_.emplace(tok, i).second) {
      throw Error(ErrorKind::kConfig, "duplicate vocabulary token '" + tok + "'");
    }
  }
  auto marker = [&](const std::string& name) {
    auto id = find(name);
    if (!id) {
      throw Error(ErrorKind::kConfig,
                  "marker '" + name + "' missing from vocabulary");
    }
    return *id;
  };
  begin_id_ = marker(begin_marker);
  end_id_ = marker(end_marker);
  if (unk_token) unk_id_ = marker(*unk_token);
  uniform_.assign(vocabulary_.size(),
                  1.0 / static_cast<double>(vocabulary_.size()));
}

std::optional<std::size_t> NgramTable::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t NgramTable::token_id(std::string_view token) const {
  if (auto id = find(token)) return *id;
  if (unk_id_) return *unk_id_;
  throw Error(ErrorKind::kVocabulary,
              "token '" + std::string(token) + "' is not in the vocabulary");
}

void NgramTable::set_distribution(const std::vector<std::string>& context,
                                  std::vector<double> probs) {
  if (context.size() != static_cast<std::size_t>(order_ - 1)) {
    throw Error(ErrorKind::kConfig,
                "context length " + std::to_string(context.size()) +
                    " does not match order " + std::to_string(order_));
  }
  if (probs.size() != vocabulary_.size()) {
    throw Error(ErrorKind::kConfig, "probability vector has " +
                                        std::to_string(probs.size()) +
                                        " entries, vocabulary has " +
                                        std::to_string(vocabulary_.size()));
  }
  std::vector<std::size_t> key;
  key.reserve(context.size());
  for (const auto& tok : context) {
    auto id = find(tok);
    if (!id) {
      throw Error(ErrorKind::kVocabulary,
                  "context token '" + tok + "' is not in the vocabulary");
    }
    key.push_back(*id);
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw Error(ErrorKind::kConfig, "negative probability in table");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << sum << " for context [";
    for (const auto& tok : context) msg << ' ' << tok;
    msg << " ]";
    throw Error(ErrorKind::kConfig, msg.str());
  }
  if (!table_.emplace(std::move(key), std::move(probs)).second) {
    throw Error(ErrorKind::kConfig, "duplicate context in table");
  }
}

NgramTable NgramTable::from_json(const json& doc) {
  try {
    NgramTable table(doc.at("vocabulary").get<std::vector<std::string>>(),
                     doc.at("order").get<int>(),
                     doc.value("begin_marker", std::string("<s>")),
                     doc.value("end_marker", std::string("</s>")),
                     doc.contains("unk_token") && !doc["unk_token"].is_null()
                         ? std::optional<std::string>(
                               doc["unk_token"].get<std::string>())
                         : std::nullopt);
    for (const auto& entry : doc.value("contexts", json::array())) {
      auto context = entry.at("context").get<std::vector<std::string>>();
      const auto& probs = entry.at("probs");
      std::vector<double> vec(table.vocab_size(), 0.0);
      if (probs.is_array()) {
        vec = probs.get<std::vector<double>>();
      } else if (probs.is_object()) {
        // Sparse form: unlisted tokens have probability zero.
        for (const auto& [tok, p] : probs.items()) {
          auto id = table.find(tok);
          if (!id) {
            throw Error(ErrorKind::kVocabulary,
                        "token '" + tok + "' is not in the vocabulary");
          }
          vec[*id] = p.get<double>();
        }
      } else {
        throw Error(ErrorKind::kConfig, "probs must be an array or object");
      }
      table.set_distribution(context, std::move(vec));
    }
    return table;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed n-gram table: ") +
                                        e.what());
  }
}

NgramTable NgramTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kConfig,
                "cannot open n-gram table " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig,
                "cannot parse n-gram table " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::vector<double> NgramTable::next_distribution(
    std::span<const std::string> context) const {
  std::vector<std::size_t> ids;
  ids.reserve(context.size());
  for (const auto& tok : context) ids.push_back(token_id(tok));
  return next_distribution_ids(ids);
}

const std::vector<double>& NgramTable::next_distribution_ids(
    std::span<const std::size_t> history) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  std::vector<std::size_t> key(width, begin_id_);
  const std::size_t take = std::min(width, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            key.end() - static_cast<std::ptrdiff_t>(take));
  auto it = table_.find(key);
  return it == table_.end() ? uniform_ : it->second;
}

std::vector<std::string> NgramTable::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

ToyBackend::ToyBackend(std::shared_ptr<const NgramTable> table, int top_k,
                       int parallelism)
    : table_(std::move(table)), top_k_(top_k), parallelism_(parallelism) {
  if (!table_) throw Error(ErrorKind::kConfig, "null n-gram table");
  if (top_k_ < 1 || static_cast<std::size_t>(top_k_) > table_->vocab_size()) {
    throw Error(ErrorKind::kConfig,
                "top_k must be in [1, |V|] for the toy backend");
  }
  if (parallelism_ < 1) throw Error(ErrorKind::kConfig, "parallelism must be >= 1");
}

TokenDistribution ToyBackend::describe(const std::vector<double>& probs,
                                       std::size_t realized,
                                       bool leading_space) const {
  const auto& vocab = table_->vocabulary();
  TokenDistribution dist;
  dist.token_text = (leading_space ? " " : "") + vocab[realized];
  dist.token_logprob = std::log(probs[realized]);

  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending probability, ties by vocabulary order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b];
  });
  const std::size_t k = static_cast<std::size_t>(top_k_);
  std::vector<bool> listed(probs.size(), false);
  for (std::size_t i = 0; i < k && i < order.size(); ++i) {
    const std::size_t id = order[i];
    if (probs[id] <= 0.0) break;
    dist.top_alternatives.push_back({vocab[id], std::log(probs[id])});
    listed[id] = true;
  }
  double tail = 0.0;
  for (std::size_t id = 0; id < probs.size(); ++id) {
    if (!listed[id]) tail += probs[id];
  }
  dist.tail_mass = tail;
  return dist;
}

std::vector<std::size_t> ToyBackend::history_for(std::string_view prompt) const {
  std::vector<std::size_t> history;
  for (const auto& tok : NgramTable::tokenize(prompt)) {
    history.push_back(table_->token_id(tok));
  }
  return history;
}

GenerationResult ToyBackend::generate(std::string_view prompt,
                                      const GenerationParams& params) {
  if (prompt.empty()) throw Error(ErrorKind::kPrecondition, "empty prompt");
  params.validate();
  auto history = history_for(prompt);
  std::mt19937_64 rng(params.seed);

  GenerationResult result;
  result.finish_reason = FinishReason::kLength;
  for (int step = 0; step < params.max_tokens; ++step) {
    const auto& probs = table_->next_distribution_ids(history);
    std::size_t next = 0;
    if (params.temperature == 0.0) {
      // First maximum wins, which breaks ties by vocabulary order.
      next = static_cast<std::size_t>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      std::vector<double> weights(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) {
        weights[i] = probs[i] > 0.0 ? std::pow(probs[i], 1.0 / params.temperature)
                                    : 0.0;
      }
      std::discrete_distribution<std::size_t> pick(weights.begin(),
                                                   weights.end());
      next = pick(rng);
    }
    if (next == table_->end_id()) {
      result.finish_reason = FinishReason::kStop;
      break;
    }
    auto dist = describe(probs, next, !result.tokens.empty());
    result.text += dist.token_text;
    result.tokens.push_back(std::move(dist));
    history.push_back(next);

    bool stopped = false;
    for (const auto& stop : params.stop_sequences) {
      if (stop.empty()) continue;
      if (auto pos = result.text.find(stop); pos != std::string::npos) {
        result.text.resize(pos);
        stopped = true;
        break;
      }
    }
    if (stopped) {
      result.finish_reason = FinishReason::kStop;
      break;
    }
  }
  return result;
}

ScoringResult ToyBackend::score(std::string_view text, std::string_view context) {
  const auto text_tokens = NgramTable::tokenize(text);
  if (text_tokens.empty()) {
    throw Error(ErrorKind::kPrecondition, "cannot score empty text");
  }
  auto history = history_for(context);
  ScoringResult result;
  result.tokens.reserve(text_tokens.size());
  for (std::size_t i = 0; i < text_tokens.size(); ++i) {
    const std::size_t id = table_->token_id(text_tokens[i]);
    const auto& probs = table_->next_distribution_ids(history);
    auto dist = describe(probs, id, i > 0);
    dist.token_text = (i > 0 ? " " : "") + text_tokens[i];
    result.tokens.push_back(std::move(dist));
    history.push_back(id);
  }
  return result;
}

std::unique_ptr<Backend> as_backend(std::shared_ptr<const NgramTable> table,
                                    int top_k, int parallelism) {
  return std::make_unique<ToyBackend>(std::move(table), top_k, parallelism);
}

}  // namespace apa
