/* Copyright 2026 The APA Toolkit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the APA toolkit.
 *
 * Every fallible call returns an apa_status. On failure the message is
 * available from apa_last_error() on the calling thread until the next call.
 * Strings returned through `char** out` are heap-allocated and must be
 * released with apa_string_free().
 */
#ifndef APA_APA_H_
#define APA_APA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(APA_BUILDING)
#define APA_API __attribute__((visibility("default")))
#else
#define APA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum apa_status {
  APA_OK = 0,
  APA_ERR_INTERNAL = 1,
  APA_ERR_CONFIG = 2,  /* bad config, template, precondition, capability */
  APA_ERR_BACKEND = 3, /* transport or protocol failure */
  APA_ERR_DATA = 4     /* vocabulary, normalization, parse, integrity */
} apa_status;

typedef struct apa_config apa_config;
typedef struct apa_backend apa_backend;

APA_API const char* apa_version(void);
APA_API const char* apa_last_error(void);
/* Fine-grained kind of the last error, e.g. "normalization". */
APA_API const char* apa_last_error_kind(void);
APA_API void apa_string_free(char* s);
/* trace|debug|info|warn|error|off */
APA_API apa_status apa_set_log_level(const char* level);

/* Configuration. */
APA_API apa_status apa_config_new(apa_config** out);
APA_API apa_status apa_config_load(const char* path, apa_config** out);
/* Relative paths in `json` resolve against `base_dir` (may be NULL). */
APA_API apa_status apa_config_from_json(const char* json, const char* base_dir,
                                         apa_config** out);
APA_API apa_status apa_config_set(apa_config* config, const char* key, const char* value);
APA_API apa_status apa_config_validate(const apa_config* config);
APA_API apa_status apa_config_describe(const apa_config* config, char** out_json);
APA_API uint64_t apa_config_seed(const apa_config* config);
APA_API void apa_config_free(apa_config* config);

/* Backends. */
APA_API apa_status apa_backend_open(const apa_config* config, apa_backend** out);
APA_API apa_status apa_backend_open_toy(const char* fixture_path, int top_k,
                                        int parallelism, apa_backend** out);
APA_API apa_status apa_backend_generate(apa_backend* backend, const char* prompt,
                                        int max_tokens, double temperature,
                                        uint64_t seed, char** out_json);
APA_API apa_status apa_backend_score(apa_backend* backend, const char* text,
                                     const char* context, char** out_json);
APA_API void apa_backend_free(apa_backend* backend);

/* Pipeline commands. `backend` may be NULL to build one from the config.
 * Results are JSON summaries (CSV for the sweeps). */
APA_API apa_status apa_cmd_assess(const apa_config* config, apa_backend* backend,
                                  char** out_json);
APA_API apa_status apa_cmd_detect(const apa_config* config, apa_backend* backend,
                                  char** out_json);
APA_API apa_status apa_cmd_label(const apa_config* config, apa_backend* backend,
                                 char** out_json);
APA_API apa_status apa_cmd_emit(const apa_config* config, char** out_json);
/* request: {"strategy"?, "predictions"?, "compare":[before, after]?,
 *           "aggregate":[paths]?} */
APA_API apa_status apa_cmd_eval(const apa_config* config, apa_backend* backend,
                                const char* request_json, char** out_json);
APA_API apa_status apa_cmd_sweep_epsilon(const apa_config* config, const double* epsilons,
                                         size_t n, char** out_csv);
APA_API apa_status apa_cmd_sweep_samplerep(const apa_config* config,
                                           const double* thresholds, size_t n,
                                           const char* sampled_predictions,
                                           char** out_csv);
APA_API apa_status apa_cmd_ambiguate(const apa_config* config, apa_backend* backend,
                                     const char* allowlist_path, char** out_json);
/* *ok is 1 when the file passes every check. */
APA_API apa_status apa_sft_verify(const char* path, const char* answer_cue,
                                  char** out_json, int* ok);

/* Primitives. */
/* Entropy in nats of one position from its listed log-probabilities and the
 * unlisted tail mass. mode: tail_lump|renormalize|exact (NULL = tail_lump). */
APA_API apa_status apa_token_entropy(const double* logprobs, size_t n, double tail_mass,
                                     const char* mode, double* out);
/* Average token entropy of `text` scored with an empty prefix. */
APA_API apa_status apa_sentence_entropy(apa_backend* backend, const char* text,
                                        const char* mode, double* out);
/* 1 when gain > epsilon (perceived ambiguous), else 0. */
APA_API int apa_classify(double gain, double epsilon);
APA_API apa_status apa_rouge_l(const char* prediction, const char* const* references,
                               size_t n, double* out);
APA_API int apa_is_clarification(const char* text);
/* counts[0..4] hold outcomes 1..5. */
APA_API apa_status apa_f1(const uint64_t counts[5], double* f1_u, double* f1_a);

#ifdef __cplusplus
}
#endif

#endif /* APA_APA_H_ */
