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

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "apa/error.hpp"
#include "apa/http_backend.hpp"
#include "apa/uncertainty.hpp"

using namespace apa;
using nlohmann::json;

namespace {

// Local completions server with a swappable handler.
class FakeServer {
 public:
  using Handler = std::function<void(const json&, httplib::Response&)>;

  explicit FakeServer(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_auth = req.get_header_value("Authorization");
      const auto body = json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        requests.push_back(body);
      }
      const int now = ++in_flight;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      handler_(body, res);
      --in_flight;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  HttpBackendConfig config() const {
    HttpBackendConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions";
    c.model = "fake";
    c.top_k = 2;
    c.parallelism = 2;
    c.retry_base = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  std::atomic<int> hits{0}, in_flight{0}, peak{0};
  int delay_ms = 0;
  std::string last_auth;
  std::vector<json> requests;

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
};

json position(const std::string& tok, double lp, json top) {
  return json{{"tok", tok}, {"lp", lp}, {"top", std::move(top)}};
}

// Completions body from per-position entries; offsets are derived.
std::string body_of(const std::string& text, const std::vector<json>& positions,
                    const std::string& finish = "stop") {
  json tokens = json::array(), lps = json::array(), tops = json::array(),
       offsets = json::array();
  std::size_t off = 0;
  for (const auto& p : positions) {
    tokens.push_back(p["tok"]);
    lps.push_back(p["lp"]);
    tops.push_back(p["top"]);
    offsets.push_back(off);
    off += p["tok"].get<std::string>().size();
  }
  json doc = {{"choices",
               {{{"text", text},
                 {"finish_reason", finish},
                 {"logprobs",
                  {{"tokens", tokens},
                   {"token_logprobs", lps},
                   {"top_logprobs", tops},
                   {"text_offset", offsets}}}}}}};
  return doc.dump();
}

}  // namespace

TEST_CASE("wire request shape") {
  CompletionRequest r;
  r.prompt = "hi";
  r.max_tokens = 0;
  r.echo = true;
  r.logprobs = 3;
  const auto j = to_wire(r, "m");
  CHECK(j["echo"] == true);
  CHECK(j["logprobs"] == 3);
  CHECK(j["model"] == "m");
  CHECK_FALSE(j.contains("seed"));
  CHECK_FALSE(j.contains("stop"));
}

TEST_CASE("parse_completion: capability and protocol errors") {
  auto kind_of = [](const std::string& body) {
    try {
      parse_completion(body);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIntegrity;  // sentinel: no error
  };
  CHECK(kind_of("not json") == ErrorKind::kProtocol);
  CHECK(kind_of(R"({"choices":[]})") == ErrorKind::kProtocol);
  CHECK(kind_of(R"({"choices":[{"text":"x"}]})") == ErrorKind::kCapability);
  CHECK(kind_of(R"({"choices":[{"text":"x","logprobs":{"tokens":["x"],"token_logprobs":[0]}}]})") ==
        ErrorKind::kCapability);
  CHECK(kind_of(R"({"choices":[{"text":"x","logprobs":{"tokens":["x"],"token_logprobs":[0,1],
        "top_logprobs":[null]}}]})") == ErrorKind::kProtocol);
  try {
    parse_completion(R"({"choices":[{"text":"x"}]})");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("logprobs") != std::string::npos);
  }
}

TEST_CASE("parse_completion accepts list-form top_logprobs") {
  const auto c = parse_completion(R"({"choices":[{"text":"a","logprobs":{"tokens":["a"],
      "token_logprobs":[-0.1],"top_logprobs":[[{"token":"a","logprob":-0.1}]]}}]})");
  REQUIRE(c.tokens.size() == 1);
  REQUIRE(c.tokens[0].top);
  CHECK((*c.tokens[0].top)[0].token_text == "a");
}

TEST_CASE("make_distribution truncates to k and computes the tail") {
  WireToken t;
  t.text = "b";
  t.logprob = std::log(0.3);
  t.top = std::vector<TokenAlternative>{{"c", std::log(0.1)}, {"a", std::log(0.5)},
                                        {"b", std::log(0.3)}, {"a", std::log(0.01)}};
  const auto d = make_distribution(t, 2);
  REQUIRE(d.top_alternatives.size() == 2);
  CHECK(d.top_alternatives[0].token_text == "a");
  CHECK(d.top_alternatives[1].token_text == "b");
  CHECK(d.tail_mass == doctest::Approx(0.2));
  CHECK(d.is_normalized());

  // Realized token outside the server's list but above the k-th entry.
  t.text = "z";
  t.logprob = std::log(0.35);
  t.top = std::vector<TokenAlternative>{{"a", std::log(0.4)}, {"b", std::log(0.2)}};
  const auto e = make_distribution(t, 2);
  CHECK(e.top_alternatives[1].token_text == "z");
  CHECK(e.tail_mass == doctest::Approx(0.25));
}

TEST_CASE("construction validates the endpoint and limits") {
  HttpBackendConfig c;
  c.endpoint = "ftp://x";
  CHECK_THROWS_AS(HttpBackend{c}, Error);
  c.endpoint = "http://127.0.0.1:1";
  c.top_k = 0;
  CHECK_THROWS_AS(HttpBackend{c}, Error);
  c.top_k = 2;
  c.parallelism = 0;
  CHECK_THROWS_AS(HttpBackend{c}, Error);
}

TEST_CASE("score drops context positions and the unconditioned first token") {
  FakeServer server([](const json& req, httplib::Response& res) {
    CHECK(req["echo"] == true);
    CHECK(req["max_tokens"] == 0);
    CHECK(req["prompt"] == "Q: the cat");
    res.set_content(
        body_of("Q: the cat",
                {position("Q:", 0, nullptr),
                 position(" the", std::log(0.5), {{" the", std::log(0.5)}, {" a", std::log(0.5)}}),
                 position(" cat", std::log(0.9), {{" cat", std::log(0.9)}, {" dog", std::log(0.05)}})}),
        "application/json");
  });
  HttpBackend b(server.config());
  const auto s = b.score(" the cat", "Q:");
  REQUIRE(s.token_count() == 2);
  CHECK(s.tokens[0].tail_mass == doctest::Approx(0.0));
  CHECK(s.tokens[1].tail_mass == doctest::Approx(0.05));
  CHECK(std::abs(token_entropy(s.tokens[0]) - std::log(2.0)) < 1e-12);
}

TEST_CASE("generate maps text, tokens and finish reason") {
  FakeServer server([](const json& req, httplib::Response& res) {
    CHECK(req["temperature"] == 0.0);
    CHECK(req["stop"] == json::array({"\n"}));
    res.set_content(body_of(" yes", {position(" yes", std::log(0.8),
                                              {{" yes", std::log(0.8)}, {" no", std::log(0.2)}})},
                            "length"),
                    "application/json");
  });
  auto cfg = server.config();
  cfg.api_key = "sk-secret";
  HttpBackend b(cfg);
  auto p = GenerationParams::greedy(4);
  p.stop_sequences = {"\n"};
  const auto g = b.generate("Q?", p);
  CHECK(g.text == " yes");
  CHECK(g.finish_reason == FinishReason::kLength);
  REQUIRE(g.tokens.size() == 1);
  CHECK(g.tokens[0].tail_mass == doctest::Approx(0.0));
  CHECK(server.last_auth == "Bearer sk-secret");
  CHECK_THROWS_AS(b.generate("", p), Error);
}

TEST_CASE("transient failures are retried then surfaced") {
  std::atomic<int> calls{0};
  FakeServer server([&](const json&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    res.set_content(body_of("x", {position("x", 0.0, {{"x", 0.0}})}), "application/json");
  });
  HttpBackend b(server.config());
  CHECK(b.generate("p", GenerationParams::greedy(1)).text == "x");
  CHECK(server.hits == 3);

  FakeServer down([](const json&, httplib::Response& res) { res.status = 500; });
  HttpBackend d(down.config());
  try {
    d.generate("p", GenerationParams::greedy(1));
    FAIL("expected transport error");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 3);
    CHECK(exit_code_for(e.kind()) == 3);
  }
  CHECK(down.hits == 3);
}

TEST_CASE("client errors are not retried") {
  FakeServer server([](const json&, httplib::Response& res) {
    res.status = 400;
    res.set_content("{\"error\":\"bad\"}", "application/json");
  });
  HttpBackend b(server.config());
  try {
    b.generate("p", GenerationParams::greedy(1));
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProtocol);
  }
  CHECK(server.hits == 1);
}

TEST_CASE("missing echo support is a capability error") {
  FakeServer server([](const json&, httplib::Response& res) {
    res.set_content(body_of("", {}), "application/json");
  });
  HttpBackend b(server.config());
  try {
    b.score("abc", "");
    FAIL("expected capability error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapability);
  }
}

TEST_CASE("unreachable host is a transport error") {
  HttpBackendConfig c;
  c.endpoint = "http://127.0.0.1:9/v1/completions";
  c.retry_base = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(1);
  HttpBackend b(c);
  CHECK_THROWS_AS(b.generate("p", GenerationParams::greedy(1)), TransportError);
}

TEST_CASE("in-flight requests are bounded by parallelism") {
  FakeServer server([](const json&, httplib::Response& res) {
    res.set_content(body_of("x", {position("x", 0.0, {{"x", 0.0}})}), "application/json");
  });
  server.delay_ms = 30;
  HttpBackend b(server.config());
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] { b.generate("p", GenerationParams::greedy(1)); });
  }
  for (auto& t : threads) t.join();
  CHECK(server.hits == 6);
  CHECK(server.peak <= 2);
}
