// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/lexsort.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "lexsort/config.hpp"
#include "lexsort/corpus.hpp"
#include "lexsort/ensemble.hpp"
#include "lexsort/eval.hpp"
#include "lexsort/explain.hpp"
#include "lexsort/llm.hpp"

struct lxs_dataset {
  lexsort::Dataset data;
};

struct lxs_bundle {
  lexsort::ModelBundle bundle;
};

struct lxs_mock_server {
  std::unique_ptr<lexsort::MockEndpoint> endpoint;
};

namespace {

using lexsort::Json;

thread_local std::string g_last_error;

lxs_status status_for(lexsort::ErrorKind kind) {
  switch (kind) {
    case lexsort::ErrorKind::kValidation: return LXS_ERR_VALIDATION;
    case lexsort::ErrorKind::kTaxonomy: return LXS_ERR_TAXONOMY;
    case lexsort::ErrorKind::kIo: return LXS_ERR_IO;
    case lexsort::ErrorKind::kCorruption: return LXS_ERR_CORRUPTION;
    case lexsort::ErrorKind::kUnsupportedVersion: return LXS_ERR_UNSUPPORTED_VERSION;
    case lexsort::ErrorKind::kTraining: return LXS_ERR_TRAINING;
    case lexsort::ErrorKind::kConfiguration: return LXS_ERR_CONFIGURATION;
    case lexsort::ErrorKind::kSize: return LXS_ERR_SIZE;
    case lexsort::ErrorKind::kTransport: return LXS_ERR_TRANSPORT;
  }
  return LXS_ERR_INTERNAL;
}

struct ArgError {
  std::string what;
};

template <typename F>
lxs_status guarded(F&& f) {
  try {
    f();
    return LXS_OK;
  } catch (const ArgError& e) {
    g_last_error = e.what;
    return LXS_ERR_INVALID_ARGUMENT;
  } catch (const lexsort::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return LXS_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LXS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LXS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LXS_ERR_INTERNAL;
  }
}

template <typename T>
void require(T* p, const char* name) {
  if (p == nullptr) throw ArgError{std::string(name) + " must not be null"};
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json object_or_empty(const char* text, std::string_view what) {
  if (text == nullptr || *text == '\0') return nlohmann::json::object();
  return lexsort::parse_json_object(text, what);
}

std::optional<double> noise_option(nlohmann::json& opts) {
  std::optional<double> rate;
  if (opts.contains("noise_rate")) {
    const auto& r = opts["noise_rate"];
    if (!r.is_null()) {
      if (!r.is_number()) throw lexsort::ValidationError("noise_rate must be a number or null");
      rate = r.get<double>();
      if (!(*rate >= 0.0 && *rate < 1.0))
        throw lexsort::ValidationError("noise_rate must lie in [0, 1)");
    }
    opts.erase("noise_rate");
  }
  return rate;
}

void reject_leftovers(const nlohmann::json& opts, std::string_view what) {
  for (const auto& [k, v] : opts.items())
    throw lexsort::ValidationError(std::string(what) + ": unknown field '" + k + "'");
}

Json history_json(const lexsort::TrainHistory& h) {
  Json out = Json::array();
  for (const auto& e : h)
    out.push_back({{"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
  return out;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::size_t target_from_json(const nlohmann::json& t, lexsort::Task task) {
  if (t.is_number_unsigned()) {
    const auto idx = t.get<std::size_t>();
    if (idx >= lexsort::task_label_count(task))
      throw lexsort::ValidationError("target index out of range");
    return idx;
  }
  if (t.is_string()) {
    const auto names = lexsort::task_label_names(task);
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == t.get<std::string>()) return i;
    throw lexsort::TaxonomyError("target '" + t.get<std::string>() + "' is not a " +
                                 std::string(lexsort::task_name(task)) + " label");
  }
  throw lexsort::ValidationError("target must be a label name, an index or null");
}

std::vector<std::uint64_t> seed_list(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw lexsort::ValidationError("seeds must be a non-empty array");
  return j.get<std::vector<std::uint64_t>>();
}

}  // namespace

extern "C" {

const char* lxs_version(void) { return lexsort::kVersion.data(); }

const char* lxs_status_name(lxs_status status) {
  switch (status) {
    case LXS_OK: return "ok";
    case LXS_ERR_VALIDATION: return "validation";
    case LXS_ERR_TAXONOMY: return "taxonomy";
    case LXS_ERR_IO: return "io";
    case LXS_ERR_CORRUPTION: return "corruption";
    case LXS_ERR_UNSUPPORTED_VERSION: return "unsupported_version";
    case LXS_ERR_TRAINING: return "training";
    case LXS_ERR_CONFIGURATION: return "configuration";
    case LXS_ERR_SIZE: return "size";
    case LXS_ERR_TRANSPORT: return "transport";
    case LXS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LXS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lxs_last_error(void) { return g_last_error.c_str(); }

void lxs_string_free(char* s) { std::free(s); }

lxs_status lxs_config_resolve(const char* kind, const char* config_json, char** out_json) {
  return guarded([&] {
    require(kind, "kind");
    require(out_json, "out_json");
    const std::string k = kind;
    const auto j = object_or_empty(config_json, std::string(k) + " config");
    Json out;
    if (k == "corpus") {
      out = lexsort::to_json(lexsort::corpus_spec_from_json(j));
    } else if (k == "split") {
      out = lexsort::to_json(lexsort::split_fractions_from_json(j));
    } else if (k == "train") {
      out = lexsort::to_json(lexsort::ensemble_config_from_json(j));
    } else if (k == "trainer") {
      out = lexsort::to_json(lexsort::simulated_finetune_from_json(j));
    } else if (k == "llm") {
      auto rest = j;
      const auto task = lexsort::parse_task(rest.value("task", "binary"));
      rest.erase("task");
      out = Json{{"task", lexsort::task_name(task)}};
      const Json llm = lexsort::to_json(lexsort::llm_config_from_json(rest));
      for (const auto& [key, v] : llm.items()) out[key] = v;
    } else {
      throw lexsort::ValidationError("unknown config kind '" + k + "'");
    }
    *out_json = dup_string(out.dump());
  });
}

// ---- datasets ----------------------------------------------------------

lxs_status lxs_corpus_generate(const char* spec_json, lxs_dataset** out) {
  return guarded([&] {
    require(out, "out");
    const auto spec = lexsort::corpus_spec_from_json(object_or_empty(spec_json, "corpus spec"));
    *out = new lxs_dataset{lexsort::generate_noisy_corpus(spec)};
  });
}

lxs_status lxs_dataset_load(const char* path, lxs_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new lxs_dataset{lexsort::load_jsonl(path)};
  });
}

lxs_status lxs_dataset_save(const lxs_dataset* data, const char* path) {
  return guarded([&] {
    require(data, "data");
    require(path, "path");
    lexsort::save_jsonl(data->data, path);
  });
}

size_t lxs_dataset_size(const lxs_dataset* data) { return data ? data->data.size() : 0; }

lxs_status lxs_dataset_split(const lxs_dataset* data, const char* fractions_json, uint64_t seed,
                             lxs_dataset** train, lxs_dataset** val, lxs_dataset** test) {
  return guarded([&] {
    require(data, "data");
    const auto fr =
        lexsort::split_fractions_from_json(object_or_empty(fractions_json, "split fractions"));
    auto parts = lexsort::split(data->data, fr, seed);
    std::unique_ptr<lxs_dataset> a(new lxs_dataset{std::move(parts.train)});
    std::unique_ptr<lxs_dataset> b(new lxs_dataset{std::move(parts.val)});
    std::unique_ptr<lxs_dataset> c(new lxs_dataset{std::move(parts.test)});
    if (train) *train = a.release();
    if (val) *val = b.release();
    if (test) *test = c.release();
  });
}

lxs_status lxs_dataset_text(const lxs_dataset* data, const char* doc_id, char** out_text) {
  return guarded([&] {
    require(data, "data");
    require(doc_id, "doc_id");
    require(out_text, "out_text");
    for (const auto& d : data->data) {
      if (d.id == doc_id) {
        *out_text = dup_string(d.text);
        return;
      }
    }
    throw lexsort::ValidationError("no document with id '" + std::string(doc_id) + "'");
  });
}

void lxs_dataset_free(lxs_dataset* data) { delete data; }

// ---- models ------------------------------------------------------------

lxs_status lxs_train(const lxs_dataset* train, const lxs_dataset* val, const char* config_json,
                     lxs_bundle** out, char** summary_json) {
  return guarded([&] {
    require(train, "train");
    require(val, "val");
    require(out, "out");
    const auto cfg = lexsort::ensemble_config_from_json(object_or_empty(config_json, "train config"));
    auto result = lexsort::train_ensemble(train->data, val->data, cfg);
    if (summary_json) {
      Json s;
      s["type"] = "train_summary";
      s["config"] = lexsort::to_json(cfg);
      s["alpha"] = result.bundle.alpha;
      s["alpha_accuracy"] = result.alpha_accuracy;
      s["val_accuracy"] = result.val_accuracy;
      s["bow_history"] = history_json(result.bow_history);
      s["cnn_history"] = history_json(result.cnn_history);
      *summary_json = dup_string(s.dump(2) + "\n");
    }
    *out = new lxs_bundle{std::move(result.bundle)};
  });
}

lxs_status lxs_bundle_load(const char* path, lxs_bundle** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new lxs_bundle{lexsort::load_bundle(path)};
  });
}

lxs_status lxs_bundle_save(const lxs_bundle* bundle, const char* path) {
  return guarded([&] {
    require(bundle, "bundle");
    require(path, "path");
    lexsort::save_bundle(bundle->bundle, path);
  });
}

lxs_status lxs_bundle_info(const lxs_bundle* bundle, char** out_json) {
  return guarded([&] {
    require(bundle, "bundle");
    require(out_json, "out_json");
    const auto& b = bundle->bundle;
    Json j;
    j["format_version"] = b.format_version;
    j["task"] = lexsort::task_name(b.task);
    j["labels"] = lexsort::task_label_names(b.task);
    j["window"] = b.window;
    j["alpha"] = b.alpha;
    j["vocab_size"] = b.vocab.size();
    j["ngram_min"] = b.vocab.n_min();
    j["ngram_max"] = b.vocab.n_max();
    j["hidden_size"] = b.bow.hidden_size();
    j["cnn_vocab_size"] = b.cnn_vocab.size();
    j["embed_dim"] = b.cnn.embed_dim();
    j["n_filters"] = b.cnn.n_filters();
    j["kernel_width"] = b.cnn.kernel_width;
    *out_json = dup_string(j.dump());
  });
}

void lxs_bundle_free(lxs_bundle* bundle) { delete bundle; }

lxs_status lxs_predict(const lxs_bundle* bundle, const char* text, char** out_json) {
  return guarded([&] {
    require(bundle, "bundle");
    require(text, "text");
    require(out_json, "out_json");
    const auto r = lexsort::predict(bundle->bundle, text);
    Json j;
    j["label"] = r.label;
    j["label_name"] = lexsort::task_label_name(bundle->bundle.task, r.label);
    j["probabilities"] = vector_json(r.probabilities);
    j["bow_probabilities"] = vector_json(r.bow_probabilities);
    j["cnn_probabilities"] = vector_json(r.cnn_probabilities);
    *out_json = dup_string(j.dump());
  });
}

// ---- experiments -------------------------------------------------------

lxs_status lxs_evaluate(const lxs_bundle* bundle, const lxs_dataset* data,
                        const char* options_json, char** report_json) {
  return guarded([&] {
    require(bundle, "bundle");
    require(data, "data");
    require(report_json, "report_json");
    auto opts = object_or_empty(options_json, "evaluate options");
    const auto noise = noise_option(opts);
    reject_leftovers(opts, "evaluate options");
    const auto m = lexsort::evaluate_bundle(bundle->bundle, data->data);
    *report_json =
        dup_string(lexsort::metrics_json(m, lexsort::ReportMeta::for_task(m.task, noise)));
  });
}

lxs_status lxs_hpo(const lxs_dataset* train, const lxs_dataset* val, const char* options_json,
                   char** report_json) {
  return guarded([&] {
    require(train, "train");
    require(val, "val");
    require(report_json, "report_json");
    auto opts = object_or_empty(options_json, "hpo options");
    const auto noise = noise_option(opts);
    const auto cfg = lexsort::ensemble_config_from_json(
        opts.contains("train") ? opts["train"] : nlohmann::json::object());
    const auto grid = opts.contains("grid") ? opts["grid"].get<std::vector<std::size_t>>()
                                            : lexsort::default_window_grid(cfg.task);
    opts.erase("train");
    opts.erase("grid");
    reject_leftovers(opts, "hpo options");
    const auto h = lexsort::hpo_context_window(grid, train->data, val->data, cfg.task, cfg);
    *report_json = dup_string(lexsort::hpo_json(h, lexsort::ReportMeta::for_task(h.task, noise)));
  });
}

lxs_status lxs_curve(const lxs_dataset* pool, const lxs_dataset* test, const char* options_json,
                     char** report_json) {
  return guarded([&] {
    require(pool, "pool");
    require(test, "test");
    require(report_json, "report_json");
    auto opts = object_or_empty(options_json, "curve options");
    const auto noise = noise_option(opts);
    const auto trainer = lexsort::simulated_finetune_from_json(
        opts.contains("trainer") ? opts["trainer"] : nlohmann::json::object());
    const auto sizes = opts.contains("sizes") ? opts["sizes"].get<std::vector<std::size_t>>()
                                              : lexsort::default_curve_sizes();
    const auto seeds = opts.contains("seeds") ? seed_list(opts["seeds"])
                                              : std::vector<std::uint64_t>{1, 2, 3};
    opts.erase("trainer");
    opts.erase("sizes");
    opts.erase("seeds");
    reject_leftovers(opts, "curve options");
    const auto curve = lexsort::learning_curve(sizes, seeds, trainer, pool->data, test->data);
    *report_json =
        dup_string(lexsort::curve_json(curve, lexsort::ReportMeta::for_task(trainer.task, noise)));
  });
}

lxs_status lxs_report_write(lxs_report_kind kind, const char* report_json, const char* format,
                            const char* path) {
  return guarded([&] {
    require(report_json, "report_json");
    require(path, "path");
    const auto fmt = format ? lexsort::parse_report_format(format) : lexsort::report_format_for(path);
    lexsort::ReportMeta meta;
    switch (kind) {
      case LXS_REPORT_METRICS: {
        const auto m = lexsort::parse_metrics_json(report_json, &meta);
        lexsort::emit_report(m, meta, fmt, path);
        return;
      }
      case LXS_REPORT_CURVE: {
        const auto c = lexsort::parse_curve_json(report_json, &meta);
        lexsort::emit_report(c, meta, fmt, path);
        return;
      }
      case LXS_REPORT_HPO: {
        const auto h = lexsort::parse_hpo_json(report_json, &meta);
        lexsort::emit_report(h, meta, fmt, path);
        return;
      }
    }
    throw ArgError{"unknown report kind"};
  });
}

// ---- attribution -------------------------------------------------------

lxs_status lxs_explain(const lxs_bundle* bundle, const char* text, const char* options_json,
                       char** attribution_json) {
  return guarded([&] {
    require(bundle, "bundle");
    require(text, "text");
    require(attribution_json, "attribution_json");
    auto opts = object_or_empty(options_json, "explain options");
    const std::string method = opts.value("method", "sampled");
    const auto n_perm = opts.value("n_permutations", std::size_t{2000});
    const auto seed = opts.value("seed", std::uint64_t{1});
    std::optional<std::size_t> target;
    if (opts.contains("target") && !opts["target"].is_null())
      target = target_from_json(opts["target"], bundle->bundle.task);
    for (const auto* k : {"method", "n_permutations", "seed", "target"}) opts.erase(k);
    reject_leftovers(opts, "explain options");
    lexsort::Attribution a;
    if (method == "exact")
      a = lexsort::explain_exact(bundle->bundle, text, target);
    else if (method == "sampled")
      a = lexsort::explain_sampled(bundle->bundle, text, n_perm, seed, target);
    else
      throw lexsort::ValidationError("unknown method '" + method + "' (exact, sampled)");
    Json j = lexsort::to_json(a, bundle->bundle.task);
    j["method"] = method;
    *attribution_json = dup_string(j.dump(2) + "\n");
  });
}

lxs_status lxs_render_overlay(const char* text, const char* attribution_json, const char* format,
                              char** out) {
  return guarded([&] {
    require(text, "text");
    require(attribution_json, "attribution_json");
    require(format, "format");
    require(out, "out");
    const auto a =
        lexsort::attribution_from_json(lexsort::parse_json_object(attribution_json, "attribution"));
    *out = dup_string(lexsort::render_overlay(text, a, lexsort::parse_overlay_format(format)));
  });
}

// ---- remote classification ---------------------------------------------

lxs_status lxs_llm_classify(const lxs_dataset* data, const char* config_json,
                            char** report_json) {
  return guarded([&] {
    require(data, "data");
    require(report_json, "report_json");
    auto j = object_or_empty(config_json, "llm config");
    const auto task = lexsort::parse_task(j.value("task", "binary"));
    j.erase("task");
    auto cfg = lexsort::llm_config_from_json(j);
    cfg.api_key = lexsort::LlmConfig::api_key_from_env();
    if (cfg.api_key.empty())
      throw lexsort::ConfigurationError("LEXSORT_API_KEY is not set");
    const auto docs = lexsort::filter_for_task(data->data, task);
    const auto outcomes = lexsort::classify_remote(cfg, docs.documents(), task);

    std::vector<lexsort::Prediction> preds;
    std::vector<std::size_t> truths;
    Json rows = Json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      preds.push_back(outcomes[i].parsed.label);
      truths.push_back(*lexsort::task_index(docs[i].observed_label, task));
      rows.push_back(lexsort::to_json(outcomes[i], task));
    }
    const auto m = lexsort::evaluate(preds, truths, task);
    Json report;
    report["type"] = "llm_outcomes";
    report["task"] = lexsort::task_name(task);
    Json c = lexsort::to_json(cfg);
    report["config"] = c;
    report["outcomes"] = rows;
    report["metrics"] = Json::parse(lexsort::metrics_json(m, lexsort::ReportMeta::for_task(task, {})));
    *report_json = dup_string(report.dump(2) + "\n");
  });
}

lxs_status lxs_llm_build_finetune(const lxs_dataset* data, const char* task, size_t window,
                                  const char* path, size_t* out_count) {
  return guarded([&] {
    require(data, "data");
    require(task, "task");
    require(path, "path");
    const auto n = lexsort::build_finetune_file(data->data.documents(), lexsort::parse_task(task),
                                                window, path);
    if (out_count) *out_count = n;
  });
}

lxs_status lxs_mock_start(const char* script_json, const char* host, int port,
                          lxs_mock_server** out) {
  return guarded([&] {
    require(script_json, "script_json");
    require(out, "out");
    auto script = lexsort::parse_script(script_json);
    auto server = std::make_unique<lxs_mock_server>();
    server->endpoint = std::make_unique<lexsort::MockEndpoint>(
        std::move(script), host ? std::string(host) : std::string("127.0.0.1"), port);
    *out = server.release();
  });
}

int lxs_mock_port(const lxs_mock_server* server) {
  return server ? server->endpoint->port() : -1;
}

lxs_status lxs_mock_requests(const lxs_mock_server* server, char** out_json) {
  return guarded([&] {
    require(server, "server");
    require(out_json, "out_json");
    Json out = Json::array();
    for (const auto& r : server->endpoint->requests())
      out.push_back({{"path", r.path}, {"authorization", r.authorization}, {"body", r.body}});
    *out_json = dup_string(out.dump());
  });
}

void lxs_mock_free(lxs_mock_server* server) { delete server; }

}  // extern "C"
