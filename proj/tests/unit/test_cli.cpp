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

// Runs the installed-style `apa` binary and checks exit codes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

const std::string kApa = APA_CLI_PATH;
const std::string kConfig = std::string(APA_SOURCE_DIR) + "/data/toy/config.json";

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const auto capture = std::filesystem::temp_directory_path() /
                       ("apa_cli_" + std::to_string(::getpid()) + ".txt");
  const std::string cmd = kApa + " " + args + " >" + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(capture);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("apa_cli_run_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const std::string base = "--config " + kConfig + " --out " + dir.string() + " ";

  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("--config /nonexistent.json assess").code == 2);

  auto r = run(base + "detect");
  CHECK(r.code == 2);
  CHECK(r.out.find("apa assess") != std::string::npos);

  r = run(base + "assess");
  CHECK(r.code == 0);
  CHECK(r.out.find("seed=13") != std::string::npos);
  CHECK(run(base + "--seed 7 detect").out.find("seed=7") != std::string::npos);
  CHECK(run(base + "label").code == 0);
  CHECK(run(base + "emit").code == 0);
  CHECK(run("verify " + (dir / "sft.jsonl").string()).code == 0);

  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << "{\"id\":\"x\",\"prompt\":\"p\",\"completion\":\"\",\"source\":\"correct\"}\n";
  }
  CHECK(run("verify " + (dir / "bad.jsonl").string()).code == 4);

  r = run(base + "sweep --epsilons 0.1,0.5");
  CHECK(r.code == 0);
  CHECK(r.out.find("0.1,4") != std::string::npos);
  CHECK(run(base + "--epsilon abc assess").code == 2);
  CHECK(run(base + "--backend remote:http://127.0.0.1:9/v1/completions eval --strategy direct")
            .code == 0);  // per-sample transport errors are recorded, not fatal
  CHECK(run(base + "eval --strategy direct").code == 0);
  CHECK(run(base + "eval --predictions " + (dir / "bad.jsonl").string()).code == 4);

  std::filesystem::remove_all(dir);
}
