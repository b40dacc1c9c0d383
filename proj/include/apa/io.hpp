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

#ifndef APA_IO_HPP_
#define APA_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace apa::io {

// Calls `fn(record, line_number)` for every non-blank line. Malformed JSON
// raises ParseError with the 1-based line number.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const nlohmann::json&, std::size_t)>& fn);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// One compact JSON object per line, '\n' terminated.
std::string to_jsonl(const std::vector<nlohmann::ordered_json>& rows);

std::string sha256_hex(std::string_view data);

}  // namespace apa::io

#endif  // APA_IO_HPP_
