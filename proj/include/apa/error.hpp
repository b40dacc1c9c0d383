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

#ifndef APA_ERROR_HPP_
#define APA_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apa {

enum class ErrorKind {
  kPrecondition,
  kConfig,
  kTemplate,
  kCapability,
  kTransport,  // retryable
  kProtocol,
  kVocabulary,
  kNormalization,
  kEmptyInput,
  kParse,
  kIntegrity,
};

const char* to_string(ErrorKind kind);

// Process exit code for an error kind: 2 config, 3 backend, 4 data integrity.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Transport failure after the retry budget was spent.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts)
      : Error(ErrorKind::kTransport,
              message + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}

  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Malformed backend response; keeps a bounded excerpt of the raw payload.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& message, const std::string& payload)
      : Error(ErrorKind::kProtocol, message + "; payload: " + excerpt(payload)),
        payload_excerpt_(excerpt(payload)) {}

  const std::string& payload_excerpt() const { return payload_excerpt_; }

  static std::string excerpt(const std::string& payload,
                             std::size_t limit = 256) {
    if (payload.size() <= limit) return payload;
    return payload.substr(0, limit) + "...";
  }

 private:
  std::string payload_excerpt_;
};

// Malformed input line; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& message)
      : Error(ErrorKind::kParse,
              source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace apa

#endif  // APA_ERROR_HPP_
