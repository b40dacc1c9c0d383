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

#include "apa/backend.hpp"

#include <cmath>

#include "apa/error.hpp"

namespace apa {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) {
    throw Error(ErrorKind::kPrecondition, "temperature must be >= 0");
  }
  if (top_k_logprobs < 1) {
    throw Error(ErrorKind::kPrecondition, "top_k_logprobs must be >= 1");
  }
  if (max_tokens < 0) {
    throw Error(ErrorKind::kPrecondition, "max_tokens must be >= 0");
  }
}

double TokenDistribution::listed_mass() const {
  double sum = 0.0;
  for (const auto& alt : top_alternatives) sum += std::exp(alt.logprob);
  return sum;
}

bool TokenDistribution::is_normalized() const {
  if (tail_mass < -kNormalizationTolerance) return false;
  return std::abs(listed_mass() + tail_mass - 1.0) <= kNormalizationTolerance;
}

const char* to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

}  // namespace apa
