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

#include "apa/uncertainty.hpp"

#include <cmath>
#include <numeric>

#include "apa/error.hpp"

namespace apa {
namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

const char* to_string(TruncationMode mode) {
  switch (mode) {
    case TruncationMode::kTailLump: return "tail_lump";
    case TruncationMode::kRenormalize: return "renormalize";
    case TruncationMode::kExact: return "exact";
  }
  return "tail_lump";
}

std::optional<TruncationMode> truncation_mode_from_string(std::string_view name) {
  if (name == "tail_lump") return TruncationMode::kTailLump;
  if (name == "renormalize") return TruncationMode::kRenormalize;
  if (name == "exact") return TruncationMode::kExact;
  return std::nullopt;
}

double token_entropy(const TokenDistribution& dist, TruncationMode mode) {
  if (dist.tail_mass < -TokenDistribution::kNormalizationTolerance) {
    throw Error(ErrorKind::kNormalization, "negative tail mass " +
                                               std::to_string(dist.tail_mass));
  }
  if (!dist.is_normalized()) {
    throw Error(ErrorKind::kNormalization,
                "distribution mass " +
                    std::to_string(dist.listed_mass() + dist.tail_mass) +
                    " is not 1");
  }
  const double tail = std::max(0.0, dist.tail_mass);

  double h = 0.0;
  switch (mode) {
    case TruncationMode::kTailLump:
      for (const auto& alt : dist.top_alternatives) {
        h -= plogp(std::exp(alt.logprob));
      }
      h -= plogp(tail);
      break;
    case TruncationMode::kRenormalize: {
      const double listed = dist.listed_mass();
      if (listed <= 0.0) {
        throw Error(ErrorKind::kNormalization,
                    "no listed mass to renormalize");
      }
      for (const auto& alt : dist.top_alternatives) {
        h -= plogp(std::exp(alt.logprob) / listed);
      }
      break;
    }
    case TruncationMode::kExact:
      if (tail >= kExactTailTolerance) {
        throw Error(ErrorKind::kNormalization,
                    "exact mode requires the full vocabulary; tail mass " +
                        std::to_string(tail));
      }
      for (const auto& alt : dist.top_alternatives) {
        h -= plogp(std::exp(alt.logprob));
      }
      break;
  }
  // Rounding can leave -0 or a tiny negative on one-hot distributions.
  return h > 0.0 ? h : 0.0;
}

EntropyProfile entropy_profile(const ScoringResult& scoring, TruncationMode mode) {
  if (scoring.tokens.empty()) {
    throw Error(ErrorKind::kEmptyInput, "cannot profile an empty scoring");
  }
  EntropyProfile profile;
  profile.truncation_mode = mode;
  profile.per_token_entropy.reserve(scoring.tokens.size());
  for (const auto& dist : scoring.tokens) {
    profile.per_token_entropy.push_back(token_entropy(dist, mode));
  }
  profile.average_entropy =
      std::accumulate(profile.per_token_entropy.begin(),
                      profile.per_token_entropy.end(), 0.0) /
      static_cast<double>(profile.per_token_entropy.size());
  return profile;
}

double average_entropy(const std::vector<TokenDistribution>& tokens,
                       TruncationMode mode) {
  return entropy_profile(ScoringResult{tokens}, mode).average_entropy;
}

EntropyProfile sentence_entropy(Backend& backend, std::string_view text,
                                TruncationMode mode) {
  return entropy_profile(backend.score(text, ""), mode);
}

double info_gain(const EntropyProfile& query, const EntropyProfile& disambig) {
  if (query.truncation_mode != disambig.truncation_mode) {
    throw Error(ErrorKind::kConfig,
                std::string("entropy profiles use different truncation modes: ") +
                    to_string(query.truncation_mode) + " vs " +
                    to_string(disambig.truncation_mode));
  }
  return query.average_entropy - disambig.average_entropy;
}

const char* to_string(Verdict verdict) {
  return verdict == Verdict::kPerceivedAmbiguous ? "perceived_ambiguous"
                                                 : "perceived_unambiguous";
}

std::optional<Verdict> verdict_from_string(std::string_view name) {
  if (name == "perceived_ambiguous") return Verdict::kPerceivedAmbiguous;
  if (name == "perceived_unambiguous") return Verdict::kPerceivedUnambiguous;
  return std::nullopt;
}

Verdict classify(double gain, double epsilon) {
  return gain > epsilon ? Verdict::kPerceivedAmbiguous
                        : Verdict::kPerceivedUnambiguous;
}

InfoGainReport make_report(const EntropyProfile& query,
                           const EntropyProfile& disambig, double epsilon) {
  InfoGainReport report;
  report.h_query = query.average_entropy;
  report.h_disambig = disambig.average_entropy;
  report.info_gain = info_gain(query, disambig);
  report.epsilon = epsilon;
  report.verdict = classify(report.info_gain, epsilon);
  return report;
}

}  // namespace apa
