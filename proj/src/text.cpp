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

#include "apa/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace apa::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
  auto begin = std::find_if_not(s.begin(), s.end(), is_space);
  auto end = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  return begin < end ? std::string(begin, end) : std::string();
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string trim_generation(std::string_view s) {
  // Leading blank lines are skipped so "\nParis" still yields "Paris".
  std::string trimmed = trim(s);
  auto nl = trimmed.find('\n');
  if (nl != std::string::npos) trimmed.resize(nl);
  return trim(trimmed);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string word;
  while (in >> word) out.push_back(std::move(word));
  return out;
}

std::string first_word(std::string_view s) {
  for (auto& word : split_whitespace(s)) {
    auto begin = std::find_if_not(word.begin(), word.end(), is_punct);
    auto end = std::find_if_not(word.rbegin(), word.rend(), is_punct).base();
    if (begin < end) return to_lower(std::string(begin, end));
    return std::string();
  }
  return std::string();
}

}  // namespace apa::text
