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

#include "apa/run.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "apa/error.hpp"
#include "apa/http_backend.hpp"
#include "apa/io.hpp"
#include "apa/parallel.hpp"
#include "apa/toy_model.hpp"

namespace apa::run {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kConfig,
                "--" + std::string(key) + ": not a number: '" + std::string(value) + "'");
  }
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::kConfig,
                "--" + std::string(key) + ": not an integer: '" + std::string(value) + "'");
  }
  return v;
}

TruncationMode parse_mode(std::string_view value) {
  auto mode = truncation_mode_from_string(value);
  if (!mode) {
    throw Error(ErrorKind::kConfig, "unknown truncation mode '" + std::string(value) +
                                        "' (tail_lump|renormalize|exact)");
  }
  return *mode;
}

SelectionStrategy parse_strategy(std::string_view value) {
  auto s = selection_strategy_from_string(value);
  if (!s) throw Error(ErrorKind::kConfig, "unknown strategy '" + std::string(value) + "'");
  return *s;
}

ClarifyKind parse_clarify(std::string_view value) {
  auto k = clarify_kind_from_string(value);
  if (!k) {
    throw Error(ErrorKind::kConfig,
                "unknown clarify kind '" + std::string(value) + "' (fixed|generated)");
  }
  return *k;
}

void require_checkpoint(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kConfig, "missing checkpoint " + path.string() + "; run `apa " +
                                        std::string(producer) + "` first");
  }
}

void update_manifest(const RunConfig& config, std::string_view command,
                     const ordered_json& summary) {
  const fs::path path = config.out_dir / files::kManifest;
  ordered_json manifest;
  if (fs::exists(path)) {
    try {
      manifest = ordered_json::parse(io::read_file(path));
    } catch (const json::exception&) {
      manifest = ordered_json();
    }
  }
  manifest["config_hash"] = config.hash();
  manifest["seed"] = config.seed;
  manifest["epsilon"] = config.epsilon;
  manifest["truncation_mode"] = to_string(config.mode);
  manifest["template_hashes"] = load_templates(config).hashes();
  manifest["config"] = config.to_json();
  manifest["commands"][std::string(command)] = summary;
  io::write_file_atomic(path, manifest.dump(2) + "\n");
}

std::unique_ptr<Backend> backend_or_default(const RunConfig& config, Backend* given,
                                            Backend*& use) {
  if (given) {
    use = given;
    return nullptr;
  }
  auto owned = make_backend(config);
  use = owned.get();
  return owned;
}

std::vector<QASample> load_config_dataset(const RunConfig& config) {
  if (config.dataset.empty()) throw Error(ErrorKind::kConfig, "no dataset configured");
  return load_dataset(config.dataset);
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::kConfig, "config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "backend", "epsilon",     "truncation_mode", "seed",       "template_dir",
      "dataset", "out",         "strategy",        "clarify_kind", "rouge_threshold",
      "max_tokens", "sample_rep"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      c.backend.kind = b.value("kind", c.backend.kind);
      if (b.contains("fixture")) c.backend.fixture = resolve(base_dir, b["fixture"].get<std::string>());
      c.backend.endpoint = b.value("endpoint", c.backend.endpoint);
      c.backend.model = b.value("model", c.backend.model);
      c.backend.api_key = b.value("api_key", c.backend.api_key);
      c.backend.top_k = b.value("top_k", c.backend.top_k);
      c.backend.parallelism = b.value("parallelism", c.backend.parallelism);
      c.backend.max_attempts = b.value("max_attempts", c.backend.max_attempts);
      c.backend.retry_base_ms = b.value("retry_base_ms", c.backend.retry_base_ms);
      c.backend.timeout_s = b.value("timeout_s", c.backend.timeout_s);
    }
    c.epsilon = doc.value("epsilon", c.epsilon);
    if (doc.contains("truncation_mode")) {
      c.mode = parse_mode(doc["truncation_mode"].get<std::string>());
    }
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("template_dir") && !doc["template_dir"].is_null()) {
      c.template_dir = resolve(base_dir, doc["template_dir"].get<std::string>());
    }
    if (doc.contains("dataset")) c.dataset = resolve(base_dir, doc["dataset"].get<std::string>());
    if (doc.contains("out")) c.out_dir = resolve(base_dir, doc["out"].get<std::string>());
    if (doc.contains("strategy")) c.strategy = parse_strategy(doc["strategy"].get<std::string>());
    if (doc.contains("clarify_kind")) {
      c.clarify_kind = parse_clarify(doc["clarify_kind"].get<std::string>());
    }
    c.rouge_threshold = doc.value("rouge_threshold", c.rouge_threshold);
    if (doc.contains("max_tokens")) {
      const auto& m = doc["max_tokens"];
      c.max_answer_tokens = m.value("answer", c.max_answer_tokens);
      c.max_disambig_tokens = m.value("disambiguation", c.max_disambig_tokens);
      c.max_clarify_tokens = m.value("clarification", c.max_clarify_tokens);
    }
    if (doc.contains("sample_rep")) {
      const auto& s = doc["sample_rep"];
      c.samplerep_samples = s.value("samples", c.samplerep_samples);
      c.samplerep_temperature = s.value("temperature", c.samplerep_temperature);
      c.samplerep_threshold = s.value("threshold", c.samplerep_threshold);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "cannot parse config " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "seed") {
    seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "epsilon") {
    epsilon = parse_double(key, value);
  } else if (key == "backend") {
    // toy | remote | toy:<fixture> | remote:<url>
    const auto colon = value.find(':');
    const std::string kind(value.substr(0, colon));
    if (kind != "toy" && kind != "remote") {
      throw Error(ErrorKind::kConfig, "--backend must start with toy or remote");
    }
    backend.kind = kind;
    if (colon != std::string_view::npos) {
      const std::string rest(value.substr(colon + 1));
      if (kind == "toy") {
        backend.fixture = rest;
      } else {
        backend.endpoint = rest;
      }
    }
  } else if (key == "out") {
    out_dir = fs::path(std::string(value));
  } else if (key == "dataset") {
    dataset = fs::path(std::string(value));
  } else if (key == "strategy") {
    strategy = parse_strategy(value);
  } else if (key == "clarify") {
    clarify_kind = parse_clarify(value);
  } else if (key == "mode") {
    mode = parse_mode(value);
  } else if (key == "top_k") {
    backend.top_k = parse_int<int>(key, value);
  } else if (key == "parallelism") {
    backend.parallelism = parse_int<int>(key, value);
  } else if (key == "template_dir") {
    template_dir = fs::path(std::string(value));
  } else if (key == "samplerep_threshold") {
    samplerep_threshold = parse_double(key, value);
  } else {
    throw Error(ErrorKind::kConfig, "unknown setting '" + std::string(key) + "'");
  }
}

void RunConfig::validate() const {
  if (!std::isfinite(epsilon)) throw Error(ErrorKind::kConfig, "epsilon must be finite");
  if (backend.parallelism < 1) throw Error(ErrorKind::kConfig, "parallelism must be >= 1");
  if (backend.top_k < 1) throw Error(ErrorKind::kConfig, "top_k must be >= 1");
  if (backend.kind != "toy" && backend.kind != "remote") {
    throw Error(ErrorKind::kConfig, "backend kind must be toy or remote");
  }
  auto must_exist = [](const fs::path& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) {
      throw Error(ErrorKind::kConfig, std::string(what) + " not found: " + p.string());
    }
  };
  must_exist(dataset, "dataset");
  if (backend.kind == "toy") must_exist(backend.fixture, "toy fixture");
  if (template_dir) must_exist(*template_dir, "template directory");
}

ordered_json RunConfig::to_json() const {
  ordered_json out;
  out["backend"] = {
      {"kind", backend.kind},
      {"fixture", backend.fixture.string()},
      {"endpoint", backend.endpoint},
      {"model", backend.model},
      {"api_key", backend.api_key.empty() ? "" : "***"},
      {"top_k", backend.top_k},
      {"parallelism", backend.parallelism},
  };
  out["epsilon"] = epsilon;
  out["truncation_mode"] = apa::to_string(mode);
  out["seed"] = seed;
  out["template_dir"] = template_dir ? json(template_dir->string()) : json(nullptr);
  out["dataset"] = dataset.string();
  out["out"] = out_dir.string();
  out["strategy"] = apa::to_string(strategy);
  out["clarify_kind"] = apa::to_string(clarify_kind);
  out["rouge_threshold"] = rouge_threshold;
  out["max_tokens"] = {{"answer", max_answer_tokens},
                       {"disambiguation", max_disambig_tokens},
                       {"clarification", max_clarify_tokens}};
  out["sample_rep"] = {{"samples", samplerep_samples},
                       {"temperature", samplerep_temperature},
                       {"threshold", samplerep_threshold}};
  return out;
}

std::string RunConfig::hash() const { return io::sha256_hex(to_json().dump()); }

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend.kind == "toy") {
    if (config.backend.fixture.empty()) {
      throw Error(ErrorKind::kConfig, "toy backend needs a fixture path");
    }
    auto table = std::make_shared<const NgramTable>(NgramTable::load(config.backend.fixture));
    const int k = std::min<int>(config.backend.top_k, static_cast<int>(table->vocab_size()));
    return as_backend(std::move(table), k, config.backend.parallelism);
  }
  if (config.backend.kind == "remote") {
    HttpBackendConfig http;
    http.endpoint = config.backend.endpoint;
    http.model = config.backend.model;
    http.api_key = config.backend.api_key;
    http.top_k = config.backend.top_k;
    http.parallelism = config.backend.parallelism;
    http.max_attempts = config.backend.max_attempts;
    http.retry_base = std::chrono::milliseconds(config.backend.retry_base_ms);
    http.timeout = std::chrono::seconds(config.backend.timeout_s);
    return std::make_unique<HttpBackend>(std::move(http));
  }
  throw Error(ErrorKind::kConfig, "unknown backend kind '" + config.backend.kind + "'");
}

TemplateSet load_templates(const RunConfig& config) {
  return config.template_dir ? TemplateSet::load(*config.template_dir) : TemplateSet::builtin();
}

ordered_json cmd_assess(const RunConfig& config, Backend* backend) {
  config.validate();
  Backend* use = nullptr;
  auto owned = backend_or_default(config, backend, use);
  const auto templates = load_templates(config);
  const auto dataset = load_config_dataset(config);

  AssessOptions options;
  options.max_tokens = config.max_answer_tokens;
  options.rouge_threshold = config.rouge_threshold;
  options.mode = config.mode;
  const auto partition =
      stage1_assess(dataset, *use, templates.get(templates::kDirect), options);
  save_partition(config.out_dir / files::kPartition, partition);

  OutcomeCounts counts;
  for (const auto& a : partition.all()) {
    if (a.category) counts.add(*a.category);
  }
  ordered_json summary;
  summary["samples"] = dataset.size();
  summary["correct"] = partition.correct.size();
  summary["incorrect"] = partition.incorrect.size();
  summary["errored"] = partition.errored.size();
  summary["categories"] = counts.c;
  update_manifest(config, "assess", summary);
  return summary;
}

ordered_json cmd_detect(const RunConfig& config, Backend* backend) {
  config.validate();
  const fs::path partition_path = config.out_dir / files::kPartition;
  require_checkpoint(partition_path, "assess");
  Backend* use = nullptr;
  auto owned = backend_or_default(config, backend, use);
  const auto templates = load_templates(config);
  const auto partition = load_partition(partition_path);

  DisambiguateOptions options;
  options.max_tokens = config.max_disambig_tokens;
  options.mode = config.mode;
  options.epsilon = config.epsilon;
  const auto records = stage2_disambiguate(partition.incorrect, *use,
                                           templates.get(templates::kDisambiguation), options);
  save_records(config.out_dir / files::kRecords, records);

  std::size_t ambiguous = 0, errored = 0, empty = 0;
  for (const auto& r : records) {
    if (r.error) ++errored;
    if (r.empty_disambiguation) ++empty;
    if (!r.error && r.verdict == Verdict::kPerceivedAmbiguous) ++ambiguous;
  }
  ordered_json summary;
  summary["records"] = records.size();
  summary["perceived_ambiguous"] = ambiguous;
  summary["empty_disambiguation"] = empty;
  summary["errored"] = errored;
  summary["epsilon"] = config.epsilon;
  update_manifest(config, "detect", summary);
  return summary;
}

ordered_json cmd_label(const RunConfig& config, Backend* backend) {
  config.validate();
  const fs::path partition_path = config.out_dir / files::kPartition;
  const fs::path records_path = config.out_dir / files::kRecords;
  require_checkpoint(partition_path, "assess");
  require_checkpoint(records_path, "detect");
  const auto partition = load_partition(partition_path);
  const auto records = load_records(records_path);

  const auto selection =
      select_and_balance(partition, records, config.strategy, config.epsilon, config.seed);

  std::map<std::string, const DisambiguationRecord*> record_by_id;
  for (const auto& r : records) record_by_id[r.sample_id] = &r;

  std::vector<ClarifyLabel> labels(selection.ambiguous.size());
  if (config.clarify_kind == ClarifyKind::kFixed) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = stage3_fixed_label(selection.ambiguous[i].sample.id, config.seed);
    }
  } else {
    Backend* use = nullptr;
    auto owned = backend_or_default(config, backend, use);
    const auto templates = load_templates(config);
    const auto& tmpl = templates.get(templates::kClarification);
    for (const auto& a : selection.ambiguous) {
      auto it = record_by_id.find(a.sample.id);
      if (it == record_by_id.end() || it->second->disambig.empty()) {
        throw Error(ErrorKind::kConfig, "generated labels need a disambiguation for '" +
                                            a.sample.id + "'; use --clarify fixed");
      }
    }
    parallel_for(labels.size(), use->parallelism(), [&](std::size_t i) {
      labels[i] = stage3_generated_label(*record_by_id.at(selection.ambiguous[i].sample.id),
                                         *use, tmpl, config.seed, config.max_clarify_tokens);
    });
  }
  save_selection(config.out_dir / files::kSelection, selection);
  save_labels(config.out_dir / files::kLabels, labels);

  std::size_t fallbacks = 0;
  for (const auto& l : labels) fallbacks += l.fallback_fixed ? 1 : 0;
  ordered_json summary;
  summary["strategy"] = to_string(config.strategy);
  summary["clarify_kind"] = to_string(config.clarify_kind);
  summary["correct"] = selection.correct.size();
  summary["ambiguous"] = selection.ambiguous.size();
  summary["fallback_fixed"] = fallbacks;
  update_manifest(config, "label", summary);
  return summary;
}

ordered_json cmd_emit(const RunConfig& config) {
  config.validate();
  const fs::path selection_path = config.out_dir / files::kSelection;
  const fs::path labels_path = config.out_dir / files::kLabels;
  require_checkpoint(selection_path, "label");
  require_checkpoint(labels_path, "label");
  const auto templates = load_templates(config);
  const auto& direct = templates.get(templates::kDirect);
  const fs::path sft_path = config.out_dir / files::kSft;
  const auto count = emit(load_selection(selection_path), load_labels(labels_path), direct,
                          config.seed, sft_path);
  const auto report = verify(sft_path, direct.answer_cue());
  if (!report.ok()) {
    throw Error(ErrorKind::kIntegrity,
                "emitted file failed verification: " + report.failures.front().message);
  }
  ordered_json summary;
  summary["records"] = count;
  summary["sft_sha256"] = io::sha256_hex(io::read_file(sft_path));
  summary["verify"] = to_json(report);
  update_manifest(config, "emit", summary);
  return summary;
}

ordered_json cmd_eval(const RunConfig& config, const EvalRequest& request, Backend* backend) {
  if (!request.aggregate.empty()) {
    std::vector<json> reports;
    for (const auto& p : request.aggregate) {
      try {
        reports.push_back(json::parse(io::read_file(p)));
      } catch (const json::exception& e) {
        throw ParseError(p.string(), 1, e.what());
      }
    }
    return aggregate_reports(reports);
  }

  config.validate();
  const auto dataset = load_config_dataset(config);
  ordered_json echo = {{"epsilon", config.epsilon},
                       {"truncation_mode", to_string(config.mode)},
                       {"rouge_threshold", config.rouge_threshold},
                       {"seed", config.seed}};

  if (request.compare_before || request.compare_after) {
    if (!request.compare_before || !request.compare_after) {
      throw Error(ErrorKind::kConfig, "compare mode needs both before and after files");
    }
    const auto before = evaluate(dataset, load_predictions(*request.compare_before),
                                 config.rouge_threshold);
    auto after = evaluate(dataset, load_predictions(*request.compare_after),
                          config.rouge_threshold);
    after.mcr = mcr(outcome_map(before), outcome_map(after));
    after.config = echo;
    after.config["mode"] = "compare";
    auto out = to_json(after);
    io::write_file_atomic(config.out_dir / "eval_compare.json", out.dump(2) + "\n");
    return out;
  }

  std::vector<Prediction> predictions;
  std::string name;
  if (request.predictions) {
    predictions = load_predictions(*request.predictions);
    name = "predictions";
  } else if (request.strategy) {
    Backend* use = nullptr;
    auto owned = backend_or_default(config, backend, use);
    const auto templates = load_templates(config);
    BaselineOptions options;
    options.max_tokens = config.max_answer_tokens;
    options.samples = config.samplerep_samples;
    options.temperature = config.samplerep_temperature;
    options.consistency_threshold = config.samplerep_threshold;
    options.seed = config.seed;
    name = *request.strategy;
    if (name == "direct") {
      predictions = run_direct(dataset, *use, templates, options);
    } else if (name == "ambig_aware") {
      predictions = run_ambig_aware(dataset, *use, templates, options);
    } else if (name == "sample_rep") {
      predictions = run_sample_rep(dataset, *use, templates, options);
      echo["samplerep_threshold"] = config.samplerep_threshold;
    } else if (name == "self_ask") {
      predictions = run_self_ask(dataset, *use, templates, options);
    } else {
      throw Error(ErrorKind::kConfig, "unknown eval strategy '" + name +
                                          "' (direct|ambig_aware|sample_rep|self_ask)");
    }
    save_predictions(config.out_dir / ("predictions_" + name + ".jsonl"), predictions);
  } else {
    throw Error(ErrorKind::kConfig, "eval needs --strategy, --predictions or --compare");
  }
  auto report = evaluate(dataset, predictions, config.rouge_threshold);
  report.config = echo;
  report.config["mode"] = name;
  auto out = to_json(report);
  io::write_file_atomic(config.out_dir / ("eval_" + name + ".json"), out.dump(2) + "\n");
  return out;
}

std::string cmd_sweep_epsilon(const RunConfig& config, const std::vector<double>& epsilons) {
  const fs::path records_path = config.out_dir / files::kRecords;
  require_checkpoint(records_path, "detect");
  const auto records = load_records(records_path);
  const auto sizes = sweep_epsilon(records, epsilons);
  std::string csv = "epsilon,pool_size\n";
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    csv += format_double(epsilons[i]) + "," + std::to_string(sizes[i]) + "\n";
  }
  io::write_file_atomic(config.out_dir / "sweep_epsilon.csv", csv);
  return csv;
}

std::string cmd_sweep_samplerep(const RunConfig& config, const std::vector<double>& thresholds,
                                const fs::path& sampled_predictions) {
  require_checkpoint(sampled_predictions, "eval --strategy sample_rep");
  config.validate();
  const auto dataset = load_config_dataset(config);
  const auto sampled = load_predictions(sampled_predictions);
  const auto sweep =
      sweep_consistency_thresholds(dataset, sampled, thresholds, config.rouge_threshold);
  std::string csv = "threshold,f1_u,f1_a,best\n";
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& row = sweep.rows[i];
    csv += format_double(row.threshold) + "," + format_double(row.f1_u) + "," +
           format_double(row.f1_a) + "," + (i == sweep.best ? "1" : "0") + "\n";
  }
  io::write_file_atomic(config.out_dir / "sweep_samplerep.csv", csv);
  return csv;
}

ordered_json cmd_ambiguate(const RunConfig& config,
                           const std::optional<fs::path>& allowlist, Backend* backend) {
  config.validate();
  Backend* use = nullptr;
  auto owned = backend_or_default(config, backend, use);
  const auto templates = load_templates(config);
  const auto dataset = load_config_dataset(config);

  struct Row {
    AmbiguationCandidate candidate;
    bool valid = false;
    std::string error;
  };
  std::vector<Row> rows(dataset.size());
  parallel_for(dataset.size(), use->parallelism(), [&](std::size_t i) {
    try {
      rows[i].candidate = ambiguate(dataset[i], *use, templates, config.max_disambig_tokens);
      if (!rows[i].candidate.discard_reason) {
        rows[i].valid = validate_ambiguation(rows[i].candidate.candidate, *use, templates);
      }
    } catch (const Error& e) {
      rows[i].candidate.id = dataset[i].id;
      rows[i].candidate.original = dataset[i].question;
      rows[i].error = e.what();
    }
  });

  std::optional<std::set<std::string>> allowed;
  if (allowlist) allowed = load_allowlist(*allowlist);

  std::vector<ordered_json> candidate_rows;
  std::vector<QASample> accepted;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ordered_json j;
    j["id"] = row.candidate.id;
    j["original"] = row.candidate.original;
    j["candidate"] = row.candidate.candidate;
    j["valid"] = row.valid;
    if (row.candidate.discard_reason) j["discard_reason"] = *row.candidate.discard_reason;
    if (!row.error.empty()) j["error"] = row.error;
    candidate_rows.push_back(std::move(j));
    if (!row.valid) continue;
    ++valid;
    if (allowed && !allowed->contains(dataset[i].id)) continue;
    QASample s;
    s.id = dataset[i].id + "-ambig";
    s.question = row.candidate.candidate;
    s.gold_ambiguous = true;
    s.source = dataset[i].source.empty() ? "ambiguated" : "ambig-" + dataset[i].source;
    accepted.push_back(std::move(s));
  }
  io::write_file_atomic(config.out_dir / "ambiguation_candidates.jsonl",
                        io::to_jsonl(candidate_rows));
  save_dataset(config.out_dir / "ambiguated.jsonl", accepted);

  ordered_json summary;
  summary["samples"] = dataset.size();
  summary["validated"] = valid;
  summary["accepted"] = accepted.size();
  summary["allowlist"] = allowlist ? json(allowlist->string()) : json(nullptr);
  return summary;
}

}  // namespace apa::run
