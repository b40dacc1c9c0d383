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

#ifndef APA_TEXT_HPP_
#define APA_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace apa::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Cuts a model continuation at its first newline and trims whitespace.
std::string trim_generation(std::string_view s);

// First whitespace-delimited word, lowercased, with surrounding ASCII
// punctuation removed. Empty when there is no word.
std::string first_word(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace apa::text

#endif  // APA_TEXT_HPP_
