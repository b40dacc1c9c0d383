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

#include "apa/apa.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "apa/error.hpp"
#include "apa/evalkit.hpp"
#include "apa/run.hpp"
#include "apa/sft.hpp"
#include "apa/toy_model.hpp"
#include "apa/uncertainty.hpp"

struct apa_config {
  apa::run::RunConfig value;
};

struct apa_backend {
  std::unique_ptr<apa::Backend> value;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;
thread_local std::string g_last_kind;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

apa_status status_for(apa::ErrorKind kind) {
  return static_cast<apa_status>(apa::exit_code_for(kind));
}

template <class Fn>
apa_status guard(Fn&& fn) {
  g_last_error.clear();
  g_last_kind.clear();
  try {
    fn();
    return APA_OK;
  } catch (const apa::Error& e) {
    g_last_error = e.what();
    g_last_kind = apa::to_string(e.kind());
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    g_last_kind = "internal";
    return APA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    g_last_kind = "internal";
    return APA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) {
    throw apa::Error(apa::ErrorKind::kPrecondition, std::string(what) + " must not be NULL");
  }
}

apa::TruncationMode mode_or_default(const char* mode) {
  if (!mode) return apa::TruncationMode::kTailLump;
  auto m = apa::truncation_mode_from_string(mode);
  if (!m) throw apa::Error(apa::ErrorKind::kConfig, std::string("unknown mode '") + mode + "'");
  return *m;
}

json distributions(const std::vector<apa::TokenDistribution>& tokens) {
  json out = json::array();
  for (const auto& t : tokens) {
    json alts = json::array();
    for (const auto& a : t.top_alternatives) alts.push_back({a.token_text, a.logprob});
    out.push_back({{"token", t.token_text},
                   {"logprob", t.token_logprob},
                   {"top", alts},
                   {"tail_mass", t.tail_mass}});
  }
  return out;
}

apa::Backend* backend_ptr(apa_backend* b) { return b ? b->value.get() : nullptr; }

template <class Fn>
apa_status run_json(const apa_config* config, char** out, Fn&& fn) {
  return guard([&] {
    require(config, "config");
    require(out, "out_json");
    *out = dup(fn().dump(2));
  });
}

}  // namespace

extern "C" {

const char* apa_version(void) { return "1.0.0"; }
const char* apa_last_error(void) { return g_last_error.c_str(); }
const char* apa_last_error_kind(void) { return g_last_kind.c_str(); }
void apa_string_free(char* s) { std::free(s); }

apa_status apa_set_log_level(const char* level) {
  return guard([&] {
    require(level, "level");
    auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::strcmp(level, "off") != 0) {
      throw apa::Error(apa::ErrorKind::kConfig, std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(lvl);
  });
}

apa_status apa_config_new(apa_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new apa_config{};
  });
}

apa_status apa_config_load(const char* path, apa_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new apa_config{apa::run::RunConfig::load(path)};
  });
}

apa_status apa_config_from_json(const char* text, const char* base_dir, apa_config** out) {
  return guard([&] {
    require(text, "json");
    require(out, "out");
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw apa::Error(apa::ErrorKind::kConfig, std::string("config is not JSON: ") + e.what());
    }
    *out = new apa_config{apa::run::RunConfig::from_json(doc, base_dir ? base_dir : "")};
  });
}

apa_status apa_config_set(apa_config* config, const char* key, const char* value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

apa_status apa_config_validate(const apa_config* config) {
  return guard([&] {
    require(config, "config");
    config->value.validate();
  });
}

apa_status apa_config_describe(const apa_config* config, char** out_json) {
  return guard([&] {
    require(config, "config");
    require(out_json, "out_json");
    auto doc = config->value.to_json();
    doc["config_hash"] = config->value.hash();
    *out_json = dup(doc.dump(2));
  });
}

uint64_t apa_config_seed(const apa_config* config) { return config ? config->value.seed : 0; }

void apa_config_free(apa_config* config) { delete config; }

apa_status apa_backend_open(const apa_config* config, apa_backend** out) {
  return guard([&] {
    require(config, "config");
    require(out, "out");
    *out = new apa_backend{apa::run::make_backend(config->value)};
  });
}

apa_status apa_backend_open_toy(const char* fixture_path, int top_k, int parallelism,
                                apa_backend** out) {
  return guard([&] {
    require(fixture_path, "fixture_path");
    require(out, "out");
    auto table = std::make_shared<const apa::NgramTable>(apa::NgramTable::load(fixture_path));
    *out = new apa_backend{apa::as_backend(std::move(table), top_k, parallelism)};
  });
}

apa_status apa_backend_generate(apa_backend* backend, const char* prompt, int max_tokens,
                                double temperature, uint64_t seed, char** out_json) {
  return guard([&] {
    require(backend, "backend");
    require(prompt, "prompt");
    require(out_json, "out_json");
    apa::GenerationParams params;
    params.max_tokens = max_tokens;
    params.temperature = temperature;
    params.seed = seed;
    params.top_k_logprobs = backend->value->top_k();
    const auto result = backend->value->generate(prompt, params);
    const char* finish = result.finish_reason == apa::FinishReason::kStop     ? "stop"
                         : result.finish_reason == apa::FinishReason::kLength ? "length"
                                                                              : "error";
    json doc = {{"text", result.text},
                {"finish_reason", finish},
                {"tokens", distributions(result.tokens)}};
    *out_json = dup(doc.dump());
  });
}

apa_status apa_backend_score(apa_backend* backend, const char* text, const char* context,
                             char** out_json) {
  return guard([&] {
    require(backend, "backend");
    require(text, "text");
    require(out_json, "out_json");
    const auto result = backend->value->score(text, context ? context : "");
    *out_json = dup(json{{"tokens", distributions(result.tokens)}}.dump());
  });
}

void apa_backend_free(apa_backend* backend) { delete backend; }

apa_status apa_cmd_assess(const apa_config* config, apa_backend* backend, char** out_json) {
  return run_json(config, out_json,
                  [&] { return apa::run::cmd_assess(config->value, backend_ptr(backend)); });
}

apa_status apa_cmd_detect(const apa_config* config, apa_backend* backend, char** out_json) {
  return run_json(config, out_json,
                  [&] { return apa::run::cmd_detect(config->value, backend_ptr(backend)); });
}

apa_status apa_cmd_label(const apa_config* config, apa_backend* backend, char** out_json) {
  return run_json(config, out_json,
                  [&] { return apa::run::cmd_label(config->value, backend_ptr(backend)); });
}

apa_status apa_cmd_emit(const apa_config* config, char** out_json) {
  return run_json(config, out_json, [&] { return apa::run::cmd_emit(config->value); });
}

apa_status apa_cmd_eval(const apa_config* config, apa_backend* backend,
                        const char* request_json, char** out_json) {
  return run_json(config, out_json, [&] {
    apa::run::EvalRequest request;
    json doc = json::object();
    if (request_json) {
      try {
        doc = json::parse(request_json);
      } catch (const json::exception& e) {
        throw apa::Error(apa::ErrorKind::kConfig,
                         std::string("eval request is not JSON: ") + e.what());
      }
    }
    try {
      if (doc.contains("strategy")) request.strategy = doc["strategy"].get<std::string>();
      if (doc.contains("predictions")) {
        request.predictions = doc["predictions"].get<std::string>();
      }
      if (doc.contains("compare")) {
        const auto& c = doc["compare"];
        if (!c.is_array() || c.size() != 2) {
          throw apa::Error(apa::ErrorKind::kConfig, "compare takes [before, after]");
        }
        request.compare_before = c[0].get<std::string>();
        request.compare_after = c[1].get<std::string>();
      }
      if (doc.contains("aggregate")) {
        for (const auto& p : doc["aggregate"]) request.aggregate.emplace_back(p.get<std::string>());
      }
    } catch (const json::exception& e) {
      throw apa::Error(apa::ErrorKind::kConfig, std::string("bad eval request: ") + e.what());
    }
    return apa::run::cmd_eval(config->value, request, backend_ptr(backend));
  });
}

apa_status apa_cmd_sweep_epsilon(const apa_config* config, const double* epsilons, size_t n,
                                 char** out_csv) {
  return guard([&] {
    require(config, "config");
    require(out_csv, "out_csv");
    if (n > 0) require(epsilons, "epsilons");
    *out_csv = dup(apa::run::cmd_sweep_epsilon(config->value,
                                                std::vector<double>(epsilons, epsilons + n)));
  });
}

apa_status apa_cmd_sweep_samplerep(const apa_config* config, const double* thresholds,
                                   size_t n, const char* sampled_predictions, char** out_csv) {
  return guard([&] {
    require(config, "config");
    require(out_csv, "out_csv");
    require(sampled_predictions, "sampled_predictions");
    if (n > 0) require(thresholds, "thresholds");
    *out_csv = dup(apa::run::cmd_sweep_samplerep(
        config->value, std::vector<double>(thresholds, thresholds + n), sampled_predictions));
  });
}

apa_status apa_cmd_ambiguate(const apa_config* config, apa_backend* backend,
                             const char* allowlist_path, char** out_json) {
  return run_json(config, out_json, [&] {
    std::optional<std::filesystem::path> allowlist;
    if (allowlist_path) allowlist = allowlist_path;
    return apa::run::cmd_ambiguate(config->value, allowlist, backend_ptr(backend));
  });
}

apa_status apa_sft_verify(const char* path, const char* answer_cue, char** out_json, int* ok) {
  return guard([&] {
    require(path, "path");
    const auto report = apa::verify(path, answer_cue ? answer_cue : "Answer:");
    if (out_json) *out_json = dup(apa::to_json(report).dump(2));
    if (ok) *ok = report.ok() ? 1 : 0;
  });
}

apa_status apa_token_entropy(const double* logprobs, size_t n, double tail_mass,
                             const char* mode, double* out) {
  return guard([&] {
    require(out, "out");
    if (n > 0) require(logprobs, "logprobs");
    apa::TokenDistribution dist;
    for (size_t i = 0; i < n; ++i) dist.top_alternatives.push_back({"", logprobs[i]});
    if (n > 0) dist.token_logprob = logprobs[0];
    dist.tail_mass = tail_mass;
    *out = apa::token_entropy(dist, mode_or_default(mode));
  });
}

apa_status apa_sentence_entropy(apa_backend* backend, const char* text, const char* mode,
                                double* out) {
  return guard([&] {
    require(backend, "backend");
    require(text, "text");
    require(out, "out");
    *out = apa::sentence_entropy(*backend->value, text, mode_or_default(mode)).average_entropy;
  });
}

int apa_classify(double gain, double epsilon) {
  return apa::classify(gain, epsilon) == apa::Verdict::kPerceivedAmbiguous ? 1 : 0;
}

apa_status apa_rouge_l(const char* prediction, const char* const* references, size_t n,
                       double* out) {
  return guard([&] {
    require(prediction, "prediction");
    require(out, "out");
    if (n > 0) require(references, "references");
    std::vector<std::string> refs;
    for (size_t i = 0; i < n; ++i) {
      require(references[i], "reference");
      refs.emplace_back(references[i]);
    }
    *out = apa::rouge_l(prediction, refs);
  });
}

int apa_is_clarification(const char* text) {
  return text && apa::is_clarification(text) ? 1 : 0;
}

apa_status apa_f1(const uint64_t counts[5], double* f1_u, double* f1_a) {
  return guard([&] {
    require(counts, "counts");
    apa::OutcomeCounts c;
    for (int i = 0; i < 5; ++i) c.c[i] = counts[i];
    if (f1_u) *f1_u = apa::f1_unambig(c);
    if (f1_a) *f1_a = apa::f1_ambig(c);
  });
}

}  // extern "C"
