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

#ifndef APA_SEEDING_HPP_
#define APA_SEEDING_HPP_

#include <cstdint>
#include <string_view>

namespace apa {

// Per-purpose random stream derived from (master seed, purpose, key), so
// adding samples never reshuffles the choices made for existing ones.
// Stable across platforms: the first 8 bytes of SHA-256 over the triple.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::string_view key);

// Uniform index in [0, n) from a derived seed.
std::size_t derive_index(std::uint64_t master, std::string_view purpose,
                         std::string_view key, std::size_t n);

}  // namespace apa

#endif  // APA_SEEDING_HPP_
