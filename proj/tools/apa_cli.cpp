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

// Command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "apa/apa.h"

namespace {

struct Globals {
  std::string config;
  std::optional<std::string> seed, epsilon, backend, out, dataset, mode, top_k, parallelism,
      templates;
  bool verbose = false;
};

int fail(apa_status status) {
  std::fprintf(stderr, "apa: error [%s]: %s\n", apa_last_error_kind(), apa_last_error());
  return static_cast<int>(status);
}

// Owns a config handle built from --config plus flag overrides (flags win).
class Session {
 public:
  ~Session() { apa_config_free(config_); }

  apa_status open(const Globals& g) {
    apa_status st = g.config.empty() ? apa_config_new(&config_)
                                     : apa_config_load(g.config.c_str(), &config_);
    if (st != APA_OK) return st;
    const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
        {"seed", &g.seed},       {"epsilon", &g.epsilon},
        {"backend", &g.backend}, {"out", &g.out},
        {"dataset", &g.dataset}, {"mode", &g.mode},
        {"top_k", &g.top_k},     {"parallelism", &g.parallelism},
        {"template_dir", &g.templates},
    };
    for (const auto& [key, value] : overrides) {
      if (*value && (st = apa_config_set(config_, key, (*value)->c_str())) != APA_OK) return st;
    }
    std::fprintf(stderr, "apa: seed=%llu\n",
                 static_cast<unsigned long long>(apa_config_seed(config_)));
    return APA_OK;
  }

  apa_status set(const char* key, const std::string& value) {
    return apa_config_set(config_, key, value.c_str());
  }

  apa_config* get() const { return config_; }

 private:
  apa_config* config_ = nullptr;
};

// `text` is read after the call that fills it has returned.
int emit_string(apa_status st, char** text) {
  if (st != APA_OK) return fail(st);
  std::string s(*text);
  apa_string_free(*text);
  std::cout << s << (!s.empty() && s.back() == '\n' ? "" : "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APA toolkit: perceived-ambiguity data pipeline and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--epsilon", g.epsilon, "InfoGain threshold (strict >)");
  app.add_option("--backend", g.backend, "toy[:fixture.json] or remote[:url]");
  app.add_option("--out", g.out, "Output / checkpoint directory");
  app.add_option("--dataset", g.dataset, "Dataset JSONL");
  app.add_option("--mode", g.mode, "Truncation mode: tail_lump|renormalize|exact");
  app.add_option("--top-k", g.top_k, "Alternatives per position");
  app.add_option("--parallelism", g.parallelism, "Concurrent backend requests");
  app.add_option("--templates", g.templates, "Directory of <name>.txt template overrides");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  auto* assess = app.add_subcommand("assess", "Stage 1: answer every question greedily and partition");
  auto* detect = app.add_subcommand("detect", "Stage 2: self-disambiguate incorrect samples and score InfoGain");
  auto* label = app.add_subcommand("label", "Stage 3: select, balance and attach clarification labels");
  std::optional<std::string> strategy, clarify;
  label->add_option("--strategy", strategy,
                    "apa_infogain|gt_random|gt_max_infogain|gt_min_infogain|answer_entropy|plain_random");
  label->add_option("--clarify", clarify, "fixed|generated");
  auto* emit = app.add_subcommand("emit", "Stage 4: write the balanced SFT JSONL");

  auto* eval = app.add_subcommand("eval", "Run a baseline or score predictions; F1u/F1a/MCR");
  std::optional<std::string> baseline, predictions, samplerep_threshold;
  std::vector<std::string> compare, aggregate;
  auto* eval_strategy =
      eval->add_option("--strategy", baseline, "direct|ambig_aware|sample_rep|self_ask");
  eval->add_option("--predictions", predictions, "Predictions JSONL to score");
  eval->add_option("--compare", compare, "Before and after predictions (MCR)")->expected(2);
  eval->add_option("--aggregate", aggregate, "Report JSON files to average");
  eval->add_option("--samplerep-threshold", samplerep_threshold, "Sample Rep consistency threshold");
  eval_strategy->excludes("--predictions")->excludes("--compare")->excludes("--aggregate");

  auto* sweep = app.add_subcommand("sweep", "Threshold tables as CSV");
  std::vector<double> epsilons, thresholds;
  std::string sampled;
  auto* eps_opt = sweep->add_option("--epsilons", epsilons, "InfoGain thresholds")->delimiter(',');
  auto* thr_opt =
      sweep->add_option("--thresholds", thresholds, "Sample Rep thresholds")->delimiter(',');
  sweep->add_option("--sampled", sampled, "Sample Rep predictions JSONL (with --thresholds)");
  eps_opt->excludes(thr_opt);

  auto* ambig = app.add_subcommand("ambiguate", "Build ambiguous variants of unambiguous questions");
  std::optional<std::string> allowlist;
  ambig->add_option("--allowlist", allowlist, "Ids kept after manual review");

  auto* verify = app.add_subcommand("verify", "Re-check an SFT JSONL file");
  std::string verify_path, answer_cue = "Answer:";
  verify->add_option("file", verify_path, "SFT JSONL")->required();
  verify->add_option("--answer-cue", answer_cue, "Required prompt suffix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  apa_set_log_level(g.verbose ? "debug" : "warn");

  if (verify->parsed()) {
    char* report = nullptr;
    int ok = 0;
    apa_status st = apa_sft_verify(verify_path.c_str(), answer_cue.c_str(), &report, &ok);
    if (st != APA_OK) return fail(st);
    std::cout << report << "\n";
    apa_string_free(report);
    return ok ? 0 : 4;
  }

  Session session;
  if (apa_status st = session.open(g); st != APA_OK) return fail(st);
  char* out = nullptr;

  if (assess->parsed()) return emit_string(apa_cmd_assess(session.get(), nullptr, &out), &out);
  if (detect->parsed()) return emit_string(apa_cmd_detect(session.get(), nullptr, &out), &out);
  if (label->parsed()) {
    if (strategy) {
      if (auto st = session.set("strategy", *strategy); st != APA_OK) return fail(st);
    }
    if (clarify) {
      if (auto st = session.set("clarify", *clarify); st != APA_OK) return fail(st);
    }
    return emit_string(apa_cmd_label(session.get(), nullptr, &out), &out);
  }
  if (emit->parsed()) return emit_string(apa_cmd_emit(session.get(), &out), &out);
  if (eval->parsed()) {
    if (samplerep_threshold) {
      if (auto st = session.set("samplerep_threshold", *samplerep_threshold); st != APA_OK) {
        return fail(st);
      }
    }
    // Request JSON by hand; the CLI does not link a JSON library.
    auto quote = [](const std::string& s) {
      std::string q = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') q += '\\';
        q += c;
      }
      return q + "\"";
    };
    std::string request = "{";
    auto field = [&](const std::string& key, const std::string& value) {
      if (request.size() > 1) request += ",";
      request += quote(key) + ":" + value;
    };
    if (baseline) field("strategy", quote(*baseline));
    if (predictions) field("predictions", quote(*predictions));
    if (!compare.empty()) field("compare", "[" + quote(compare[0]) + "," + quote(compare[1]) + "]");
    if (!aggregate.empty()) {
      std::string list = "[";
      for (std::size_t i = 0; i < aggregate.size(); ++i) {
        list += (i ? "," : "") + quote(aggregate[i]);
      }
      field("aggregate", list + "]");
    }
    request += "}";
    return emit_string(apa_cmd_eval(session.get(), nullptr, request.c_str(), &out), &out);
  }
  if (sweep->parsed()) {
    if (!thresholds.empty()) {
      if (sampled.empty()) {
        std::fprintf(stderr, "apa: error [config]: --thresholds needs --sampled\n");
        return 2;
      }
      return emit_string(apa_cmd_sweep_samplerep(session.get(), thresholds.data(),
                                                 thresholds.size(), sampled.c_str(), &out),
                         &out);
    }
    if (epsilons.empty()) epsilons = {0.1, 0.3, 0.5, 0.7, 0.9};
    return emit_string(
        apa_cmd_sweep_epsilon(session.get(), epsilons.data(), epsilons.size(), &out), &out);
  }
  if (ambig->parsed()) {
    return emit_string(apa_cmd_ambiguate(session.get(), nullptr,
                                         allowlist ? allowlist->c_str() : nullptr, &out),
                       &out);
  }
  return 2;
}
