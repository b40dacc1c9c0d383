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

#include "apa/http_backend.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "apa/error.hpp"
#include "httplib.h"

namespace apa {

using nlohmann::json;

namespace {

// Thrown inside the retry loop; converted to TransportError at the end.
struct TransientFailure {
  std::string message;
};

std::vector<TokenAlternative> parse_top(const json& entry,
                                        const std::string& body) {
  std::vector<TokenAlternative> out;
  if (entry.is_object()) {
    for (const auto& [tok, lp] : entry.items()) {
      if (!lp.is_number()) {
        throw ProtocolError("non-numeric top_logprobs value", body);
      }
      out.push_back({tok, lp.get<double>()});
    }
  } else if (entry.is_array()) {
    // Some servers send [{"token": ..., "logprob": ...}, ...].
    for (const auto& item : entry) {
      if (!item.is_object() || !item.contains("token") ||
          !item.contains("logprob")) {
        throw ProtocolError("malformed top_logprobs entry", body);
      }
      out.push_back({item["token"].get<std::string>(),
                     item["logprob"].get<double>()});
    }
  } else {
    throw ProtocolError("top_logprobs entry is neither object nor array", body);
  }
  return out;
}

}  // namespace

json to_wire(const CompletionRequest& request, const std::string& model) {
  json body = {
      {"model", model},
      {"prompt", request.prompt},
      {"max_tokens", request.max_tokens},
      {"temperature", request.temperature},
      {"logprobs", request.logprobs},
      {"echo", request.echo},
  };
  if (!request.stop.empty()) body["stop"] = request.stop;
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

WireCompletion parse_completion(std::string_view body_view) {
  const std::string body(body_view);
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    throw ProtocolError("response is not JSON", body);
  }
  if (!doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ProtocolError("response has no choices", body);
  }
  const auto& choice = doc["choices"][0];
  WireCompletion out;
  try {
    out.text = choice.value("text", std::string());
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      out.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
      throw Error(ErrorKind::kCapability,
                  "backend response lacks the 'logprobs' field");
    }
    const auto& lp = choice["logprobs"];
    if (!lp.contains("tokens") || !lp.contains("token_logprobs")) {
      throw Error(ErrorKind::kCapability,
                  "backend response lacks 'tokens'/'token_logprobs'");
    }
    if (!lp.contains("top_logprobs") || lp["top_logprobs"].is_null()) {
      throw Error(ErrorKind::kCapability,
                  "backend response lacks the 'top_logprobs' field");
    }
    const auto& tokens = lp["tokens"];
    const auto& token_lps = lp["token_logprobs"];
    const auto& tops = lp["top_logprobs"];
    if (!tokens.is_array() || !token_lps.is_array() || !tops.is_array() ||
        tokens.size() != token_lps.size() || tokens.size() != tops.size()) {
      throw ProtocolError("logprob arrays have mismatched lengths", body);
    }
    const bool has_offsets =
        lp.contains("text_offset") && lp["text_offset"].is_array();
    if (has_offsets && lp["text_offset"].size() != tokens.size()) {
      throw ProtocolError("text_offset length mismatch", body);
    }
    std::size_t running = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      WireToken tok;
      tok.text = tokens[i].get<std::string>();
      if (!token_lps[i].is_null()) tok.logprob = token_lps[i].get<double>();
      if (!tops[i].is_null()) tok.top = parse_top(tops[i], body);
      tok.offset = has_offsets ? lp["text_offset"][i].get<std::size_t>() : running;
      running = tok.offset + tok.text.size();
      out.tokens.push_back(std::move(tok));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed logprobs block: ") + e.what(),
                        body);
  }
  return out;
}

TokenDistribution make_distribution(const WireToken& token, int k) {
  TokenDistribution dist;
  dist.token_text = token.text;
  dist.token_logprob = token.logprob.value_or(0.0);
  auto alts = token.top.value_or(std::vector<TokenAlternative>{});
  std::stable_sort(alts.begin(), alts.end(),
                   [](const auto& a, const auto& b) { return a.logprob > b.logprob; });
  // Drop duplicate token strings, keeping the first (highest) entry.
  std::vector<TokenAlternative> unique;
  for (auto& alt : alts) {
    if (std::none_of(unique.begin(), unique.end(),
                     [&](const auto& u) { return u.token_text == alt.token_text; })) {
      unique.push_back(std::move(alt));
    }
  }
  const auto limit = static_cast<std::size_t>(std::max(k, 1));
  if (unique.size() > limit) unique.resize(limit);
  if (token.logprob) {
    const bool present =
        std::any_of(unique.begin(), unique.end(),
                    [&](const auto& a) { return a.token_text == token.text; });
    if (!present && !unique.empty() && *token.logprob > unique.back().logprob) {
      unique.back() = {token.text, *token.logprob};
      std::stable_sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) {
        return a.logprob > b.logprob;
      });
    }
  }
  dist.top_alternatives = std::move(unique);
  double tail = 1.0 - dist.listed_mass();
  if (tail < 0.0 && tail >= -TokenDistribution::kNormalizationTolerance) tail = 0.0;
  dist.tail_mass = tail;
  return dist;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(config_.endpoint, match, kUrl)) {
    throw Error(ErrorKind::kConfig,
                "endpoint must be an http(s) URL: '" + config_.endpoint + "'");
  }
  scheme_host_port_ = match[1].str();
  path_ = match[2].matched ? match[2].str() : "/v1/completions";
  if (config_.top_k < 1) throw Error(ErrorKind::kConfig, "top_k must be >= 1");
  if (config_.parallelism < 1 || config_.parallelism > 1024) {
    throw Error(ErrorKind::kConfig, "parallelism must be in [1, 1024]");
  }
  if (config_.max_attempts < 1) {
    throw Error(ErrorKind::kConfig, "max_attempts must be >= 1");
  }
  slots_ = std::make_unique<std::counting_semaphore<1024>>(config_.parallelism);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::post(const json& body) {
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  spdlog::debug("POST {}{} auth={} body={}", scheme_host_port_, path_,
                config_.api_key.empty() ? "none" : "Bearer ***", payload);

  slots_->acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{*slots_};

  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    try {
      httplib::Client client(scheme_host_port_);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      auto res = client.Post(path_, headers, payload, "application/json");
      if (!res) {
        throw TransientFailure{"transport error: " + httplib::to_string(res.error())};
      }
      spdlog::debug("response status={} body={}", res->status, res->body);
      if (res->status == 429 || res->status >= 500) {
        throw TransientFailure{"server returned HTTP " + std::to_string(res->status)};
      }
      if (res->status != 200) {
        throw ProtocolError("server returned HTTP " + std::to_string(res->status),
                            res->body);
      }
      return res->body;
    } catch (const TransientFailure& failure) {
      last_error = failure.message;
      spdlog::debug("attempt {} failed: {}", attempt, last_error);
      if (attempt < config_.max_attempts) {
        std::this_thread::sleep_for(config_.retry_base * (1 << (attempt - 1)));
      }
    }
  }
  throw TransportError(last_error, config_.max_attempts);
}

GenerationResult HttpBackend::generate(std::string_view prompt,
                                       const GenerationParams& params) {
  if (prompt.empty()) throw Error(ErrorKind::kPrecondition, "empty prompt");
  params.validate();
  CompletionRequest request;
  request.prompt = std::string(prompt);
  request.max_tokens = params.max_tokens;
  request.temperature = params.temperature;
  request.logprobs = config_.top_k;
  request.stop = params.stop_sequences;
  request.seed = params.seed;

  const auto completion = parse_completion(post(to_wire(request, config_.model)));
  GenerationResult result;
  result.text = completion.text;
  for (const auto& tok : completion.tokens) {
    if (!tok.logprob || !tok.top) {
      throw ProtocolError("generated position without logprobs", completion.text);
    }
    result.tokens.push_back(make_distribution(tok, config_.top_k));
  }
  if (completion.finish_reason == "stop" || completion.finish_reason.empty()) {
    result.finish_reason = FinishReason::kStop;
  } else if (completion.finish_reason == "length") {
    result.finish_reason = FinishReason::kLength;
  } else {
    result.finish_reason = FinishReason::kError;
  }
  return result;
}

ScoringResult HttpBackend::score(std::string_view text, std::string_view context) {
  if (text.empty()) throw Error(ErrorKind::kPrecondition, "cannot score empty text");
  CompletionRequest request;
  request.prompt = std::string(context) + std::string(text);
  request.max_tokens = 0;
  request.logprobs = config_.top_k;
  request.echo = true;

  const auto completion = parse_completion(post(to_wire(request, config_.model)));
  const std::size_t boundary = context.size();
  ScoringResult result;
  bool covered = false;
  for (const auto& tok : completion.tokens) {
    const std::size_t end = tok.offset + tok.text.size();
    if (tok.offset >= request.prompt.size()) break;  // generated, not echoed
    if (end <= boundary) continue;                   // fully inside context
    covered = true;
    // The first position of a sequence has no conditional distribution.
    if (!tok.logprob || !tok.top) continue;
    result.tokens.push_back(make_distribution(tok, config_.top_k));
  }
  if (!covered) {
    throw Error(ErrorKind::kCapability,
                "backend did not echo prompt tokens (field 'echo')");
  }
  if (result.tokens.empty()) {
    throw Error(ErrorKind::kCapability,
                "backend returned no prompt logprobs (field 'top_logprobs')");
  }
  return result;
}

}  // namespace apa
