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

#include "apa/seeding.hpp"

#include <openssl/evp.h>

#include <array>
#include <string>

#include "apa/error.hpp"

namespace apa {

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::string_view key) {
  std::string material = std::to_string(master);
  material += '\x1f';
  material += purpose;
  material += '\x1f';
  material += key;
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(material.data(), material.size(), digest.data(), &len, EVP_sha256(),
             nullptr);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | digest[static_cast<std::size_t>(i)];
  return out;
}

std::size_t derive_index(std::uint64_t master, std::string_view purpose,
                         std::string_view key, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kPrecondition, "cannot pick from an empty set");
  // Modulo bias is below 2^-60 for the small n used here.
  return static_cast<std::size_t>(derive_seed(master, purpose, key) % n);
}

}  // namespace apa
