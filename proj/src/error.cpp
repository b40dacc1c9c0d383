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

#include "apa/error.hpp"

namespace apa {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTemplate: return "template";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kVocabulary: return "vocabulary";
    case ErrorKind::kNormalization: return "normalization";
    case ErrorKind::kEmptyInput: return "empty_input";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIntegrity: return "integrity";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kPrecondition:
    case ErrorKind::kConfig:
    case ErrorKind::kTemplate:
    case ErrorKind::kCapability:
      return 2;
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
      return 3;
    case ErrorKind::kVocabulary:
    case ErrorKind::kNormalization:
    case ErrorKind::kEmptyInput:
    case ErrorKind::kParse:
    case ErrorKind::kIntegrity:
      return 4;
  }
  return 1;
}

}  // namespace apa
