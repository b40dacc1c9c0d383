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

#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

#include "apa/error.hpp"
#include "apa/io.hpp"
#include "apa/sft.hpp"
#include "support.hpp"

using namespace apa;
using apa::testing::TempDir;

namespace {

AssessedSample assessed(const std::string& id, std::vector<std::string> answers,
                        std::optional<bool> gold) {
  AssessedSample a;
  a.sample = {id, "Question " + id + "?", std::move(answers), gold, "test"};
  a.model_answer = "model " + id;
  return a;
}

// n correct + n ambiguous samples with fixed labels for the ambiguous half.
std::pair<Selection, std::vector<ClarifyLabel>> make_selection(std::size_t n,
                                                               std::uint64_t seed = 3) {
  Selection s;
  std::vector<ClarifyLabel> labels;
  for (std::size_t i = 0; i < n; ++i) {
    s.correct.push_back(assessed("c" + std::to_string(i), {"Answer " + std::to_string(i)}, false));
    const auto id = "a" + std::to_string(i);
    s.ambiguous.push_back(assessed(id, {}, true));
    labels.push_back(stage3_fixed_label(id, seed));
  }
  return {s, labels};
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  io::write_file_atomic(p, s);
}

}  // namespace

TEST_CASE("300 + 300 gives 600 lines, half ambig") {
  TempDir dir;
  auto [s, labels] = make_selection(300);
  const auto direct = TemplateSet::builtin().get(templates::kDirect);
  CHECK(emit(s, labels, direct, 13, dir / "sft.jsonl") == 600);
  const auto lines = lines_of(dir / "sft.jsonl");
  REQUIRE(lines.size() == 600);
  std::size_t ambig = 0;
  for (const auto& l : lines) {
    const auto j = nlohmann::json::parse(l);
    if (j["source"] == "ambig") {
      ++ambig;
      CHECK(j["clarify_kind"] == "fixed");
      CHECK(is_fixed_clarification(j["completion"].get<std::string>()));
    } else {
      CHECK_FALSE(j.contains("clarify_kind"));
    }
    CHECK(j["prompt"].get<std::string>().ends_with("Answer:"));
  }
  CHECK(ambig == 300);
  const auto report = verify(dir / "sft.jsonl");
  CHECK(report.ok());
  CHECK(report.records == 600);
  CHECK(report.per_source.at("ambig") == 300);
  CHECK(report.per_clarify_kind.at("fixed") == 300);
}

TEST_CASE("records are interleaved, not grouped by source") {
  auto [s, labels] = make_selection(50);
  const auto recs = build_sft_records(s, labels, TemplateSet::builtin().get(templates::kDirect), 1);
  std::size_t switches = 0;
  for (std::size_t i = 1; i < recs.size(); ++i) switches += recs[i].source != recs[i - 1].source;
  CHECK(switches > 10);
}

TEST_CASE("first gold answer is the completion") {
  Selection s;
  s.correct.push_back(assessed("c", {"Paris", "paris"}, false));
  s.ambiguous.push_back(assessed("a", {}, true));
  const auto recs = build_sft_records(s, {stage3_fixed_label("a", 1)},
                                      TemplateSet::builtin().get(templates::kDirect), 1);
  for (const auto& r : recs) {
    if (r.source == SftSource::kCorrect) {
      CHECK(r.completion == "Paris");
      CHECK(r.prompt == "Answer the following question.\nQuestion: Question c?\nAnswer:");
    }
  }
  // Gold-ambiguous sample already answered with a clarification keeps it.
  auto clarified = assessed("x", {}, true);
  clarified.model_answer = "Your question is ambiguous.";
  CHECK(correct_completion(clarified) == "Your question is ambiguous.");
}

TEST_CASE("missing label and imbalance are integrity errors") {
  auto [s, labels] = make_selection(3);
  labels.pop_back();
  const auto direct = TemplateSet::builtin().get(templates::kDirect);
  try {
    build_sft_records(s, labels, direct, 1);
    FAIL("missing label accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIntegrity);
    CHECK(std::string(e.what()).find("a2") != std::string::npos);
  }
  auto [t, tl] = make_selection(3);
  t.correct.pop_back();
  CHECK_THROWS_AS(build_sft_records(t, tl, direct, 1), Error);
}

TEST_CASE("same seed gives a byte-identical file") {
  TempDir dir;
  auto [s, labels] = make_selection(40);
  const auto direct = TemplateSet::builtin().get(templates::kDirect);
  emit(s, labels, direct, 9, dir / "a.jsonl");
  emit(s, labels, direct, 9, dir / "b.jsonl");
  emit(s, labels, direct, 10, dir / "c.jsonl");
  CHECK(io::read_file(dir / "a.jsonl") == io::read_file(dir / "b.jsonl"));
  CHECK(io::read_file(dir / "a.jsonl") != io::read_file(dir / "c.jsonl"));
  CHECK(io::read_file(dir / "a.jsonl").find('\r') == std::string::npos);
}

TEST_CASE("generated labels carry their kind") {
  TempDir dir;
  auto [s, labels] = make_selection(2);
  labels[0].kind = ClarifyKind::kGenerated;
  labels[0].text = "Which year do you mean?";
  emit(s, labels, TemplateSet::builtin().get(templates::kDirect), 1, dir / "g.jsonl");
  const auto r = verify(dir / "g.jsonl");
  CHECK(r.ok());
  CHECK(r.per_clarify_kind.at("generated") == 1);
  CHECK(r.per_clarify_kind.at("fixed") == 1);
}

TEST_CASE("verify reports corruption at the right line") {
  TempDir dir;
  auto [s, labels] = make_selection(3);
  emit(s, labels, TemplateSet::builtin().get(templates::kDirect), 1, dir / "ok.jsonl");
  const auto good = lines_of(dir / "ok.jsonl");

  auto corrupt = [&](std::size_t at, const std::function<void(nlohmann::ordered_json&)>& fn) {
    auto lines = good;
    auto j = nlohmann::ordered_json::parse(lines[at]);
    fn(j);
    lines[at] = j.dump();
    write_lines(dir / "bad.jsonl", lines);
    return verify(dir / "bad.jsonl");
  };

  auto r = corrupt(2, [](auto& j) { j["completion"] = ""; });
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].line == 3);

  r = corrupt(0, [](auto& j) { j["prompt"] = "no cue"; });
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].line == 1);

  std::size_t ambig_line = 0;
  while (nlohmann::json::parse(good[ambig_line])["source"] != "ambig") ++ambig_line;
  r = corrupt(ambig_line, [](auto& j) { j["completion"] = "Something else."; });
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].line == ambig_line + 1);
  r = corrupt(ambig_line, [](auto& j) { j.erase("clarify_kind"); });
  CHECK(r.failures.size() == 1);

  auto lines = good;
  lines[1] = "{not json";
  write_lines(dir / "bad.jsonl", lines);
  r = verify(dir / "bad.jsonl");
  CHECK_FALSE(r.ok());
  CHECK(r.failures[0].line == 2);

  const auto report_json = to_json(r);
  CHECK(report_json["ok"] == false);
  CHECK_THROWS_AS(verify(dir / "missing.jsonl"), Error);
}

TEST_CASE("301 correct vs 300 ambig is a balance failure") {
  TempDir dir;
  auto [s, labels] = make_selection(300);
  emit(s, labels, TemplateSet::builtin().get(templates::kDirect), 1, dir / "x.jsonl");
  auto lines = lines_of(dir / "x.jsonl");
  nlohmann::ordered_json extra;
  extra["id"] = "extra";
  extra["prompt"] = "Answer the following question.\nQuestion: Extra?\nAnswer:";
  extra["completion"] = "yes";
  extra["source"] = "correct";
  lines.push_back(extra.dump());
  write_lines(dir / "x.jsonl", lines);
  const auto r = verify(dir / "x.jsonl");
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].line == 0);
  CHECK(r.failures[0].message.find("unbalanced") != std::string::npos);
}

TEST_CASE("verify honours a custom answer cue") {
  TempDir dir;
  auto [s, labels] = make_selection(2);
  PromptTemplate custom("direct", "Q: {question}\nA:", {"question"});
  emit(s, labels, custom, 1, dir / "c.jsonl");
  CHECK_FALSE(verify(dir / "c.jsonl").ok());
  CHECK(verify(dir / "c.jsonl", custom.answer_cue()).ok());
}
