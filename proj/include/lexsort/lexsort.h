/* Copyright 2026 The lexsort Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to lexsort: courthouse-record classification, attribution and
 * experiment pipelines.
 *
 * Conventions:
 *  - Every fallible call returns lxs_status; on failure lxs_last_error()
 *    describes the problem (per thread, valid until the next failing call).
 *  - Objects are opaque handles released with their *_free function.
 *  - Strings returned through char** are owned by the caller and released
 *    with lxs_string_free.
 *  - Configuration travels as JSON objects. Missing keys take defaults,
 *    unknown keys are rejected with LXS_ERR_VALIDATION.
 *  - The API key for remote classification is read from LEXSORT_API_KEY and
 *    never appears in any configuration or output. */

#ifndef LEXSORT_LEXSORT_H_
#define LEXSORT_LEXSORT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LXS_API __declspec(dllexport)
#else
#define LXS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lxs_status {
  LXS_OK = 0,
  LXS_ERR_VALIDATION = 1,
  LXS_ERR_TAXONOMY = 2,
  LXS_ERR_IO = 3,
  LXS_ERR_CORRUPTION = 4,
  LXS_ERR_UNSUPPORTED_VERSION = 5,
  LXS_ERR_TRAINING = 6,
  LXS_ERR_CONFIGURATION = 7,
  LXS_ERR_SIZE = 8,
  LXS_ERR_TRANSPORT = 9,
  LXS_ERR_INVALID_ARGUMENT = 10, /* null handle or pointer */
  LXS_ERR_INTERNAL = 11
} lxs_status;

typedef enum lxs_report_kind {
  LXS_REPORT_METRICS = 0,
  LXS_REPORT_CURVE = 1,
  LXS_REPORT_HPO = 2
} lxs_report_kind;

typedef struct lxs_dataset lxs_dataset;
typedef struct lxs_bundle lxs_bundle;
typedef struct lxs_mock_server lxs_mock_server;

LXS_API const char* lxs_version(void);
LXS_API const char* lxs_status_name(lxs_status status);
LXS_API const char* lxs_last_error(void);
LXS_API void lxs_string_free(char* s);

/* Fills in defaults and returns the canonical form of a configuration.
 * kind: "corpus", "split", "train", "trainer" or "llm". */
LXS_API lxs_status lxs_config_resolve(const char* kind, const char* config_json, char** out_json);

/* ---- datasets ---------------------------------------------------------- */

/* Generates a corpus (noise applied at the spec's noise_rate). */
LXS_API lxs_status lxs_corpus_generate(const char* spec_json, lxs_dataset** out);
LXS_API lxs_status lxs_dataset_load(const char* path, lxs_dataset** out);
LXS_API lxs_status lxs_dataset_save(const lxs_dataset* data, const char* path);
LXS_API size_t lxs_dataset_size(const lxs_dataset* data);
/* fractions_json: {"train", "val", "test"}; any output pointer may be null. */
LXS_API lxs_status lxs_dataset_split(const lxs_dataset* data, const char* fractions_json,
                                     uint64_t seed, lxs_dataset** train, lxs_dataset** val,
                                     lxs_dataset** test);
/* Text of the document with the given id. */
LXS_API lxs_status lxs_dataset_text(const lxs_dataset* data, const char* doc_id, char** out_text);
LXS_API void lxs_dataset_free(lxs_dataset* data);

/* ---- models ------------------------------------------------------------ */

/* Trains the BOW/CNN ensemble. summary_json (may be null) receives the
 * validation accuracies, chosen alpha and per-epoch histories. */
LXS_API lxs_status lxs_train(const lxs_dataset* train, const lxs_dataset* val,
                             const char* config_json, lxs_bundle** out, char** summary_json);
LXS_API lxs_status lxs_bundle_load(const char* path, lxs_bundle** out);
LXS_API lxs_status lxs_bundle_save(const lxs_bundle* bundle, const char* path);
LXS_API lxs_status lxs_bundle_info(const lxs_bundle* bundle, char** out_json);
LXS_API void lxs_bundle_free(lxs_bundle* bundle);

/* {"label", "label_name", "probabilities", "bow_probabilities", "cnn_probabilities"} */
LXS_API lxs_status lxs_predict(const lxs_bundle* bundle, const char* text, char** out_json);

/* ---- experiments ------------------------------------------------------- */

/* options_json: {"noise_rate": number or null}. Returns a metrics report. */
LXS_API lxs_status lxs_evaluate(const lxs_bundle* bundle, const lxs_dataset* data,
                                const char* options_json, char** report_json);

/* options_json: {"grid": [windows], "train": train config, "noise_rate"}. */
LXS_API lxs_status lxs_hpo(const lxs_dataset* train, const lxs_dataset* val,
                           const char* options_json, char** report_json);

/* options_json: {"sizes", "seeds", "trainer": trainer config, "noise_rate"}. */
LXS_API lxs_status lxs_curve(const lxs_dataset* pool, const lxs_dataset* test,
                             const char* options_json, char** report_json);

/* Writes a report returned above as JSON or CSV ("json" or "csv"). */
LXS_API lxs_status lxs_report_write(lxs_report_kind kind, const char* report_json,
                                    const char* format, const char* path);

/* ---- attribution ------------------------------------------------------- */

/* options_json: {"method": "exact"|"sampled", "n_permutations", "seed",
 * "target": label name, index or null for the predicted label}. */
LXS_API lxs_status lxs_explain(const lxs_bundle* bundle, const char* text,
                               const char* options_json, char** attribution_json);
/* format: "html" or "ansi". */
LXS_API lxs_status lxs_render_overlay(const char* text, const char* attribution_json,
                                      const char* format, char** out);

/* ---- remote classification --------------------------------------------- */

/* config_json: {"task", plus llm config fields}. Returns
 * {"config", "outcomes", "metrics"}; per-document failures are reported in
 * the outcomes, not as an error status. */
LXS_API lxs_status lxs_llm_classify(const lxs_dataset* data, const char* config_json,
                                    char** report_json);
LXS_API lxs_status lxs_llm_build_finetune(const lxs_dataset* data, const char* task,
                                          size_t window, const char* path, size_t* out_count);

/* Scripted local endpoint serving POST .../v1/chat/completions. */
LXS_API lxs_status lxs_mock_start(const char* script_json, const char* host, int port,
                                  lxs_mock_server** out);
LXS_API int lxs_mock_port(const lxs_mock_server* server);
/* [{"path", "authorization", "body"}] */
LXS_API lxs_status lxs_mock_requests(const lxs_mock_server* server, char** out_json);
LXS_API void lxs_mock_free(lxs_mock_server* server);

#ifdef __cplusplus
}
#endif

#endif /* LEXSORT_LEXSORT_H_ */
