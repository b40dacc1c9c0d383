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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"

#include "apa/error.hpp"
#include "apa/io.hpp"
#include "apa/pipeline.hpp"
#include "apa/toy_model.hpp"
#include "support.hpp"

using namespace apa;
using apa::testing::full_dist;
using apa::testing::one_hot;
using apa::testing::ScriptedBackend;
using apa::testing::TempDir;

namespace {

AssessedSample assessed(const std::string& id, SampleStatus status,
                        std::optional<bool> gold = std::nullopt,
                        std::optional<double> answer_entropy = std::nullopt) {
  AssessedSample a;
  a.sample = {id, "question " + id + "?", {"ans " + id}, gold, "test"};
  a.status = status;
  a.model_answer = "model " + id;
  a.category = status == SampleStatus::kCorrect ? Outcome::k3 : Outcome::k4;
  a.answer_entropy = answer_entropy;
  return a;
}

DisambiguationRecord record(const std::string& id, double gain, double eps = 0.1) {
  DisambiguationRecord r;
  r.sample_id = id;
  r.query = "question " + id + "?";
  r.disambig = "clear question " + id + "?";
  r.h_query = 1.0 + gain;
  r.h_disambig = 1.0;
  r.info_gain = gain;
  r.verdict = classify(gain, eps);
  return r;
}

// n correct samples and the given incorrect gains.
std::pair<StageOnePartition, std::vector<DisambiguationRecord>> make_run(
    std::size_t n, const std::vector<double>& gains,
    const std::vector<std::optional<bool>>& gold = {}) {
  StageOnePartition p;
  for (std::size_t i = 0; i < n; ++i) {
    p.correct.push_back(assessed("c" + std::to_string(i), SampleStatus::kCorrect, false, 0.1));
  }
  std::vector<DisambiguationRecord> records;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const auto id = "i" + std::to_string(i);
    const auto label = i < gold.size() ? gold[i] : std::optional<bool>(true);
    p.incorrect.push_back(assessed(id, SampleStatus::kIncorrect, label, 0.01 * double(i)));
    records.push_back(record(id, gains[i]));
  }
  return {p, records};
}

std::set<std::string> ids(const std::vector<AssessedSample>& v) {
  std::set<std::string> out;
  for (const auto& a : v) out.insert(a.sample.id);
  return out;
}

}  // namespace

TEST_CASE("stage 1 partitions by outcome") {
  const auto t = TemplateSet::builtin();
  ScriptedBackend b;
  b.on_prompt("Question: Who was the first president?", "george washington");
  b.on_prompt("Question: Who won?", "Your question is ambiguous.");
  b.on_prompt("Question: Capital of France?", "Can you clarify your question?");
  b.on_prompt("Question: Which year?", "1999");
  b.fail_on("Question: Broken?", ErrorKind::kTransport);
  std::vector<QASample> d = {
      {"u1", "Who was the first president?", {"George Washington"}, false, ""},
      {"a1", "Who won?", {}, true, ""},
      {"u2", "Capital of France?", {"Paris"}, false, ""},
      {"a2", "Which year?", {}, true, ""},
      {"x", "Broken?", {"y"}, false, ""},
      {"n", "Unlabeled?", {"unknown"}, std::nullopt, ""},
  };
  const auto p = stage1_assess(d, b, t.get(templates::kDirect));
  CHECK(ids(p.correct) == std::set<std::string>{"u1", "a1", "n"});
  CHECK(ids(p.incorrect) == std::set<std::string>{"u2", "a2"});
  CHECK(ids(p.errored) == std::set<std::string>{"x"});
  CHECK(p.n() == 3);
  CHECK(p.correct[0].category == Outcome::k3);
  CHECK(p.correct[1].category == Outcome::k1);
  CHECK(p.incorrect[0].category == Outcome::k5);
  CHECK(p.incorrect[1].category == Outcome::k2);
  CHECK(p.correct[0].answer_entropy == 0.0);
  CHECK_FALSE(p.errored[0].error.empty());
  // Every sample lands in exactly one bucket.
  CHECK(p.all().size() == d.size());
}

TEST_CASE("stage 2: uniform query, one-hot disambiguation gives ln 4") {
  const auto t = TemplateSet::builtin();
  ScriptedBackend b;
  b.on_prompt("Input Question: Who won the cup?\nDisambiguation:",
              " Who won the 2010 world cup?\nInput Question: junk");
  b.on_score("Who won the cup?",
             {full_dist({0.25, 0.25, 0.25, 0.25}), full_dist({0.25, 0.25, 0.25, 0.25})});
  b.on_prompt("Input Question: Same?\nDisambiguation:", "Same?");
  std::vector<AssessedSample> in = {assessed("a", SampleStatus::kIncorrect),
                                    assessed("b", SampleStatus::kIncorrect)};
  in[0].sample.question = "Who won the cup?";
  in[1].sample.question = "Same?";
  const auto r = stage2_disambiguate(in, b, t.get(templates::kDisambiguation));
  REQUIRE(r.size() == 2);
  CHECK(r[0].disambig == "Who won the 2010 world cup?");
  CHECK(std::abs(r[0].info_gain - std::log(4.0)) <= 1e-12);
  CHECK(r[0].verdict == Verdict::kPerceivedAmbiguous);
  CHECK(r[0].info_gain == r[0].h_query - r[0].h_disambig);
  CHECK(r[1].info_gain == 0.0);
  CHECK(r[1].verdict == Verdict::kPerceivedUnambiguous);
}

TEST_CASE("stage 2: empty disambiguation and backend errors") {
  const auto t = TemplateSet::builtin();
  ScriptedBackend b;
  b.fallback = "\n";
  b.fail_on("Broken", ErrorKind::kTransport);
  std::vector<AssessedSample> in = {assessed("a", SampleStatus::kIncorrect),
                                    assessed("b", SampleStatus::kIncorrect)};
  in[1].sample.question = "Broken?";
  const auto r = stage2_disambiguate(in, b, t.get(templates::kDisambiguation));
  CHECK(r[0].empty_disambiguation);
  CHECK(r[0].verdict == Verdict::kPerceivedUnambiguous);
  CHECK(r[1].error.has_value());
  DisambiguateOptions bad;
  bad.epsilon = std::nan("");
  CHECK_THROWS_AS(stage2_disambiguate(in, b, t.get(templates::kDisambiguation), bad), Error);
}

TEST_CASE("stage 2 on the toy backend scores bare text") {
  auto table = std::make_shared<const NgramTable>(
      NgramTable::load(apa::testing::source_path("tests/fixtures/ngram/uniform4.json")));
  ToyBackend b(table, 4);
  std::vector<AssessedSample> in = {assessed("a", SampleStatus::kIncorrect)};
  in[0].sample.question = "a b";
  // Unseen template context: uniform continuation that may be empty or not;
  // either way the query itself scores ln 4 per token.
  PromptTemplate tmpl("d", "{question}", {"question"});
  const auto r = stage2_disambiguate(in, b, tmpl);
  CHECK(std::abs(r[0].h_query - std::log(4.0)) <= 1e-12);
}

TEST_CASE("fixed labels are canonical and reproducible") {
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) {
    const auto id = "s" + std::to_string(i);
    const auto l = stage3_fixed_label(id, 13);
    CHECK(l.kind == ClarifyKind::kFixed);
    CHECK(is_fixed_clarification(l.text));
    CHECK((l.text.back() == '.' || l.text.back() == '?'));
    CHECK(stage3_fixed_label(id, 13).text == l.text);
    seen.insert(l.text);
  }
  CHECK(seen.size() == 6);
  int differ = 0;
  for (int i = 0; i < 50; ++i) {
    const auto id = "s" + std::to_string(i);
    differ += stage3_fixed_label(id, 13).text != stage3_fixed_label(id, 14).text;
  }
  CHECK(differ > 0);
}

TEST_CASE("generated labels and the fixed fallback") {
  const auto t = TemplateSet::builtin();
  ScriptedBackend b;
  b.on_prompt("Ambiguous Question: How many pages in a brave new world?",
              " Your question is ambiguous. Which edition of the book are you interested in?\n"
              "Example 3:");
  b.on_prompt("Ambiguous Question: Who is it?", "Barack Obama");
  auto r = record("p", 1.0);
  r.query = "How many pages in a brave new world?";
  r.disambig = "How many pages in the 1932 edition of the book by Aldous Huxley?";
  const auto l = stage3_generated_label(r, b, t.get(templates::kClarification), 1);
  CHECK(l.kind == ClarifyKind::kGenerated);
  CHECK(l.text == "Your question is ambiguous. Which edition of the book are you interested in?");
  CHECK_FALSE(l.fallback_fixed);

  r.query = "Who is it?";
  const auto f = stage3_generated_label(r, b, t.get(templates::kClarification), 1);
  CHECK(f.fallback_fixed);
  CHECK(f.kind == ClarifyKind::kFixed);
  CHECK(f.text == stage3_fixed_label("p", 1).text);

  r.disambig.clear();
  CHECK_THROWS_AS(stage3_generated_label(r, b, t.get(templates::kClarification), 1), Error);

  ScriptedBackend broken;
  broken.fail_on("Ambiguous Question", ErrorKind::kTransport);
  r.disambig = "x";
  CHECK_THROWS_AS(stage3_generated_label(r, broken, t.get(templates::kClarification), 1),
                  Error);
}

TEST_CASE("apa_infogain with n > m subsamples the correct side") {
  std::vector<double> gains(300, 0.5);
  auto [p, recs] = make_run(500, gains);
  const auto s = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 7);
  CHECK(s.correct.size() == 300);
  CHECK(s.ambiguous.size() == 300);
  CHECK(ids(s.correct).size() == 300);
  const auto again = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 7);
  CHECK(ids(again.correct) == ids(s.correct));
  const auto other = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 8);
  CHECK(ids(other.correct) != ids(s.correct));
}

TEST_CASE("apa_infogain with n < m keeps the largest gains") {
  std::mt19937_64 rng(1);
  std::vector<double> gains(350);
  for (auto& g : gains) g = 0.11 + static_cast<double>(rng() % 100000) / 1000.0;
  auto [p, recs] = make_run(200, gains);
  const auto s = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 7);
  CHECK(s.correct.size() == 200);
  REQUIRE(s.ambiguous.size() == 200);
  // Oracle: stable sort of indices by descending gain.
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
  std::set<std::string> expected;
  for (std::size_t i = 0; i < 200; ++i) expected.insert("i" + std::to_string(order[i]));
  CHECK(ids(s.ambiguous) == expected);
  CHECK(ids(s.correct).size() == 200);
}

TEST_CASE("apa_infogain ties go to earlier records") {
  auto [p, recs] = make_run(2, {0.5, 0.5, 0.5, 0.9});
  const auto s = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 1);
  CHECK(ids(s.ambiguous) == std::set<std::string>{"i0", "i3"});
}

TEST_CASE("apa_infogain ignores gold labels") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> gains(1 + rng() % 12);
    std::vector<std::optional<bool>> gold, flipped;
    for (auto& g : gains) {
      g = static_cast<double>(rng() % 200) / 100.0 - 0.5;
      const bool b = rng() % 2;
      gold.push_back(b);
      flipped.push_back(!b);
    }
    if (std::none_of(gains.begin(), gains.end(), [](double g) { return g > 0.1; })) continue;
    const std::size_t n = 1 + rng() % 10;
    auto [p1, r1] = make_run(n, gains, gold);
    auto [p2, r2] = make_run(n, gains, flipped);
    const auto a = select_and_balance(p1, r1, SelectionStrategy::kApaInfoGain, 0.1, 5);
    const auto b = select_and_balance(p2, r2, SelectionStrategy::kApaInfoGain, 0.1, 5);
    CHECK(ids(a.ambiguous) == ids(b.ambiguous));
    CHECK(ids(a.correct) == ids(b.correct));
  }
}

TEST_CASE("every strategy returns equal halves") {
  std::mt19937_64 rng(33);
  const SelectionStrategy all[] = {
      SelectionStrategy::kApaInfoGain,   SelectionStrategy::kGtRandom,
      SelectionStrategy::kGtMaxInfoGain, SelectionStrategy::kGtMinInfoGain,
      SelectionStrategy::kAnswerEntropy, SelectionStrategy::kPlainRandom};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> gains(2 + rng() % 15);
    std::vector<std::optional<bool>> gold;
    for (std::size_t i = 0; i < gains.size(); ++i) {
      gains[i] = static_cast<double>(rng() % 100) / 50.0;
      gold.push_back(i == 0 ? true : (i == 1 ? false : rng() % 2 == 0));
    }
    gains[0] = 1.5;
    auto [p, recs] = make_run(1 + rng() % 12, gains, gold);
    for (auto strategy : all) {
      CAPTURE(to_string(strategy));
      const auto s = select_and_balance(p, recs, strategy, 0.1, trial);
      CHECK(s.correct.size() == s.ambiguous.size());
      CHECK_FALSE(s.correct.empty());
      CHECK((s.correct.size() + s.ambiguous.size()) % 2 == 0);
    }
  }
}

TEST_CASE("gt_max / gt_min pick the top and bottom m gold-ambiguous records") {
  // 10 gold-ambiguous records with distinct gains, 4 above epsilon (m = 4).
  const std::vector<double> gains = {0.05, 0.9, -0.3, 0.2, 0.01, 0.7, 0.0, 0.3, -0.1, 0.08};
  auto [p, recs] = make_run(6, gains);
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return gains[a] < gains[b]; });
  std::set<std::string> bottom, top;
  for (std::size_t i = 0; i < 4; ++i) {
    bottom.insert("i" + std::to_string(order[i]));
    top.insert("i" + std::to_string(order[order.size() - 1 - i]));
  }
  const auto mn = select_and_balance(p, recs, SelectionStrategy::kGtMinInfoGain, 0.1, 3);
  CHECK(ids(mn.ambiguous) == bottom);
  CHECK(mn.correct.size() == 4);
  const auto mx = select_and_balance(p, recs, SelectionStrategy::kGtMaxInfoGain, 0.1, 3);
  CHECK(ids(mx.ambiguous) == top);
  const auto rnd = select_and_balance(p, recs, SelectionStrategy::kGtRandom, 0.1, 3);
  CHECK(rnd.ambiguous.size() == 4);
}

TEST_CASE("gt strategies use only gold-ambiguous records") {
  auto [p, recs] = make_run(5, {0.5, 0.6, 0.7, 0.8}, {true, false, true, false});
  const auto s = select_and_balance(p, recs, SelectionStrategy::kGtMaxInfoGain, 0.1, 1);
  CHECK(ids(s.ambiguous) == std::set<std::string>{"i0", "i2"});
  auto [q, qrecs] = make_run(5, {0.5, 0.6}, {true, std::nullopt});
  try {
    select_and_balance(q, qrecs, SelectionStrategy::kGtRandom, 0.1, 1);
    FAIL("missing label accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
}

TEST_CASE("answer_entropy takes the most uncertain gold-ambiguous answers") {
  // Incorrect sample i has answer entropy 0.01 * i; budget = min(n, m) = 2.
  auto [p, recs] = make_run(4, {0.5, 0.5, 0.0, 0.0, 0.0}, {true, true, true, true, false});
  const auto s = select_and_balance(p, recs, SelectionStrategy::kAnswerEntropy, 0.1, 2);
  CHECK(ids(s.ambiguous) == std::set<std::string>{"i2", "i3"});
  for (const auto& a : s.correct) CHECK(*a.sample.gold_ambiguous == false);
  const auto r = select_and_balance(p, recs, SelectionStrategy::kPlainRandom, 0.1, 2);
  CHECK(r.ambiguous.size() == 2);
  for (const auto& a : r.ambiguous) CHECK(*a.sample.gold_ambiguous);
}

TEST_CASE("empty ambiguous pool advises a lower epsilon") {
  auto [p, recs] = make_run(3, {0.05, 0.1});
  try {
    select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 1);
    FAIL("empty pool accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK(std::string(e.what()).find("lower epsilon") != std::string::npos);
  }
  auto [q, qrecs] = make_run(2, {0.5});
  qrecs[0].sample_id = "nobody";
  CHECK_THROWS_AS(select_and_balance(q, qrecs, SelectionStrategy::kApaInfoGain, 0.1, 1), Error);
}

TEST_CASE("epsilon sweep") {
  std::vector<DisambiguationRecord> recs = {record("a", 0.05), record("b", 0.2), record("c", 0.6),
                                            record("d", 1.0)};
  CHECK(sweep_epsilon(recs, {0.1, 0.5, 0.9}) == std::vector<std::size_t>{3, 2, 1});
  CHECK(sweep_epsilon(recs, {2.0, 3.0}) == std::vector<std::size_t>{0, 0});
  CHECK(sweep_epsilon(recs, {0.5, 0.5}) == std::vector<std::size_t>{2, 2});
  CHECK_THROWS_AS(sweep_epsilon(recs, {}), Error);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DisambiguationRecord> rs;
    for (int i = 0; i < 20; ++i) {
      rs.push_back(record("r", static_cast<double>(rng() % 400) / 100.0 - 1.0));
    }
    std::vector<double> eps;
    for (int i = 0; i < 8; ++i) eps.push_back(static_cast<double>(rng() % 300) / 100.0 - 0.5);
    std::sort(eps.begin(), eps.end());
    const auto sizes = sweep_epsilon(rs, eps);
    CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
  }
}

TEST_CASE("strategy and kind names round trip") {
  for (auto s : {SelectionStrategy::kApaInfoGain, SelectionStrategy::kGtRandom,
                 SelectionStrategy::kGtMaxInfoGain, SelectionStrategy::kGtMinInfoGain,
                 SelectionStrategy::kAnswerEntropy, SelectionStrategy::kPlainRandom}) {
    CHECK(selection_strategy_from_string(to_string(s)) == s);
  }
  CHECK_FALSE(selection_strategy_from_string("random"));
  CHECK(clarify_kind_from_string("generated") == ClarifyKind::kGenerated);
  CHECK_FALSE(clarify_kind_from_string("other"));
}

TEST_CASE("checkpoints round trip exactly") {
  TempDir dir;
  auto [p, recs] = make_run(3, {0.123456789012345678, -0.5, 1.0 / 3.0});
  p.errored.push_back(assessed("e", SampleStatus::kErrored));
  p.errored.back().error = "down";
  p.errored.back().category.reset();
  recs[1].error = "timeout";
  recs[2].empty_disambiguation = true;

  save_partition(dir / "p.jsonl", p);
  const auto p2 = load_partition(dir / "p.jsonl");
  CHECK(p2.correct.size() == 3);
  CHECK(p2.incorrect.size() == 3);
  CHECK(p2.errored.size() == 1);
  CHECK(p2.errored[0].error == "down");
  save_partition(dir / "p2.jsonl", p2);
  CHECK(io::read_file(dir / "p.jsonl") == io::read_file(dir / "p2.jsonl"));

  save_records(dir / "r.jsonl", recs);
  const auto r2 = load_records(dir / "r.jsonl");
  REQUIRE(r2.size() == 3);
  CHECK(r2[0].info_gain == recs[0].info_gain);
  CHECK(r2[1].error == "timeout");
  CHECK(r2[2].empty_disambiguation);

  std::vector<ClarifyLabel> labels = {stage3_fixed_label("i0", 1),
                                      {"i2", "Which one?", ClarifyKind::kGenerated, false}};
  save_labels(dir / "l.jsonl", labels);
  const auto l2 = load_labels(dir / "l.jsonl");
  CHECK(l2[0].text == labels[0].text);
  CHECK(l2[1].kind == ClarifyKind::kGenerated);

  const auto sel = select_and_balance(p, recs, SelectionStrategy::kApaInfoGain, 0.1, 1);
  save_selection(dir / "s.jsonl", sel);
  const auto sel2 = load_selection(dir / "s.jsonl");
  CHECK(ids(sel2.correct) == ids(sel.correct));
  CHECK(ids(sel2.ambiguous) == ids(sel.ambiguous));

  apa::io::write_file_atomic(dir / "bad.jsonl", "{\"sample_id\":\"x\"}\n");
  try {
    load_records(dir / "bad.jsonl");
    FAIL("bad record accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIntegrity);
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
}

TEST_CASE("stages 1 to 3 are byte-reproducible on a deterministic backend") {
  auto run_once = [](const std::filesystem::path& dir) {
    const auto t = TemplateSet::builtin();
    auto table = std::make_shared<const NgramTable>(
        NgramTable::load(apa::testing::source_path("data/toy/toy_model.json")));
    ToyBackend b(table, 16, 4);
    const auto d = load_dataset(apa::testing::source_path("data/toy/toy_corpus.jsonl"));
    const auto p = stage1_assess(d, b, t.get(templates::kDirect));
    const auto r = stage2_disambiguate(p.incorrect, b, t.get(templates::kDisambiguation));
    const auto s = select_and_balance(p, r, SelectionStrategy::kApaInfoGain, 0.1, 13);
    std::vector<ClarifyLabel> labels;
    for (const auto& a : s.ambiguous) labels.push_back(stage3_fixed_label(a.sample.id, 13));
    save_partition(dir / "p.jsonl", p);
    save_records(dir / "r.jsonl", r);
    save_selection(dir / "s.jsonl", s);
    save_labels(dir / "l.jsonl", labels);
  };
  TempDir a, b;
  run_once(a.path());
  run_once(b.path());
  for (const char* f : {"p.jsonl", "r.jsonl", "s.jsonl", "l.jsonl"}) {
    CAPTURE(f);
    CHECK(io::read_file(a / f) == io::read_file(b / f));
  }
}
