// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/config.hpp"

#include <set>
#include <type_traits>

namespace lexsort {
namespace {

// A non-negative JSON integer; the library would otherwise wrap negatives
// and truncate fractions when converting to an unsigned type.
bool is_count(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads typed fields from a JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ValidationError(what_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
      if (!is_count(*it))
        throw ValidationError(what_ + ": field '" + key + "' must be a non-negative integer");
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(what_ + ": field '" + key + "' has the wrong type");
    }
  }

  const nlohmann::json* raw(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError(what_ + ": unknown field '" + k + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

void read_cnn_shape(Fields& f, CnnShape& s) {
  f.get("embed_dim", s.embed_dim);
  f.get("n_filters", s.n_filters);
  f.get("kernel_width", s.kernel_width);
}

}  // namespace

nlohmann::json parse_json_object(std::string_view text, std::string_view what) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(std::string(what) + " is not valid JSON");
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  return j;
}

Json to_json(const CorpusSpec& s) {
  Json j;
  j["n_documents"] = s.n_documents;
  j["class_mix"] = s.class_mix;
  j["doc_length_range"] = {s.min_tokens, s.max_tokens};
  j["signature_phrases"] = s.signature_phrases;
  j["min_signatures"] = s.min_signatures;
  j["max_signatures"] = s.max_signatures;
  j["boilerplate_vocab_size"] = s.boilerplate_vocab_size;
  if (s.signature_position.kind == SignaturePosition::Kind::kUniform)
    j["signature_position"] = "uniform";
  else
    j["signature_position"] = {{"after_offset", s.signature_position.offset}};
  j["noise_rate"] = s.noise_rate;
  j["seed"] = s.seed;
  return j;
}

CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  Fields f(j, "corpus spec");
  f.get("n_documents", s.n_documents);
  f.get("class_mix", s.class_mix);
  if (const auto* r = f.raw("doc_length_range")) {
    if (!r->is_array() || r->size() != 2 || !is_count((*r)[0]) || !is_count((*r)[1]))
      throw ValidationError("corpus spec: doc_length_range must be [min_tokens, max_tokens]");
    try {
      s.min_tokens = (*r)[0].get<std::size_t>();
      s.max_tokens = (*r)[1].get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("corpus spec: doc_length_range entries must be counts");
    }
  }
  f.get("signature_phrases", s.signature_phrases);
  f.get("min_signatures", s.min_signatures);
  f.get("max_signatures", s.max_signatures);
  f.get("boilerplate_vocab_size", s.boilerplate_vocab_size);
  if (const auto* r = f.raw("signature_position")) {
    if (r->is_string() && r->get<std::string>() == "uniform") {
      s.signature_position = SignaturePosition::uniform();
    } else if (r->is_object() && r->size() == 1 && r->contains("after_offset") &&
               is_count((*r)["after_offset"])) {
      s.signature_position =
          SignaturePosition::after_offset((*r)["after_offset"].get<std::size_t>());
    } else {
      throw ValidationError(
          "corpus spec: signature_position must be \"uniform\" or {\"after_offset\": k}");
    }
  }
  f.get("noise_rate", s.noise_rate);
  f.get("seed", s.seed);
  f.finish();
  s.validate();
  return s;
}

Json to_json(const SplitFractions& fr) {
  return Json{{"train", fr.train}, {"val", fr.val}, {"test", fr.test}};
}

SplitFractions split_fractions_from_json(const nlohmann::json& j) {
  SplitFractions fr;
  Fields f(j, "split fractions");
  f.get("train", fr.train);
  f.get("val", fr.val);
  f.get("test", fr.test);
  f.finish();
  split_sizes(1, fr);  // validates
  return fr;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["hidden_size"] = c.hidden_size;
  j["l2"] = c.l2;
  j["seed"] = c.seed;
  j["window"] = c.window;
  j["clip_norm"] = c.clip_norm;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig c = base;
  Fields f(j, "train config");
  f.get("epochs", c.epochs);
  f.get("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.get("hidden_size", c.hidden_size);
  f.get("l2", c.l2);
  f.get("seed", c.seed);
  f.get("window", c.window);
  f.get("clip_norm", c.clip_norm);
  f.finish();
  c.validate();
  return c;
}

Json to_json(const EnsembleConfig& c) {
  Json j;
  j["task"] = task_name(c.task);
  j["window"] = c.window;
  j["ngram_min"] = c.vocab.n_min;
  j["ngram_max"] = c.vocab.n_max;
  j["min_doc_freq"] = c.vocab.min_doc_freq;
  j["max_vocab"] = c.vocab.max_size;
  j["cnn_vocab_max"] = c.cnn_vocab_max;
  j["alpha"] = c.alpha ? Json(*c.alpha) : Json(nullptr);
  Json bow = to_json(c.bow);
  bow.erase("window");
  Json cnn = to_json(c.cnn);
  cnn.erase("window");
  cnn.erase("hidden_size");
  cnn["embed_dim"] = c.cnn_shape.embed_dim;
  cnn["n_filters"] = c.cnn_shape.n_filters;
  cnn["kernel_width"] = c.cnn_shape.kernel_width;
  j["bow"] = bow;
  j["cnn"] = cnn;
  return j;
}

EnsembleConfig ensemble_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("train config must be a JSON object");
  Task task = Task::kBinary;
  if (j.contains("task") && !j["task"].is_null()) {
    if (!j["task"].is_string()) throw ValidationError("train config: task must be a string");
    task = parse_task(j["task"].get<std::string>());
  }
  EnsembleConfig c = EnsembleConfig::defaults(task);
  Fields f(j, "train config");
  f.raw("task");
  f.get("window", c.window);
  f.get("ngram_min", c.vocab.n_min);
  f.get("ngram_max", c.vocab.n_max);
  f.get("min_doc_freq", c.vocab.min_doc_freq);
  f.get("max_vocab", c.vocab.max_size);
  f.get("cnn_vocab_max", c.cnn_vocab_max);
  if (const auto* a = f.raw("alpha")) {
    if (!a->is_number()) throw ValidationError("train config: alpha must be a number or null");
    c.alpha = a->get<double>();
  }
  if (const auto* b = f.raw("bow")) {
    Fields bf(*b, "train config bow");
    bf.get("epochs", c.bow.epochs);
    bf.get("batch_size", c.bow.batch_size);
    bf.get("learning_rate", c.bow.learning_rate);
    bf.get("hidden_size", c.bow.hidden_size);
    bf.get("l2", c.bow.l2);
    bf.get("seed", c.bow.seed);
    bf.get("clip_norm", c.bow.clip_norm);
    bf.finish();
  }
  if (const auto* b = f.raw("cnn")) {
    Fields cf(*b, "train config cnn");
    cf.get("epochs", c.cnn.epochs);
    cf.get("batch_size", c.cnn.batch_size);
    cf.get("learning_rate", c.cnn.learning_rate);
    cf.get("l2", c.cnn.l2);
    cf.get("seed", c.cnn.seed);
    cf.get("clip_norm", c.cnn.clip_norm);
    read_cnn_shape(cf, c.cnn_shape);
    cf.finish();
  }
  f.finish();
  c.bow.window = c.window;
  c.cnn.window = c.window;
  c.validate();
  return c;
}

Json to_json(const LlmConfig& c) {
  Json j;
  j["base_url"] = c.base_url;
  j["model_name"] = c.model_name;
  j["max_parallel"] = c.max_parallel;
  j["timeout_seconds"] = c.timeout_seconds;
  j["max_attempts"] = c.max_attempts;
  j["backoff_base_seconds"] = c.backoff_base_seconds;
  j["window"] = c.window;
  j["strict"] = c.strict;
  return j;
}

LlmConfig llm_config_from_json(const nlohmann::json& j) {
  LlmConfig c;
  Fields f(j, "llm config");
  f.get("base_url", c.base_url);
  f.get("model_name", c.model_name);
  f.get("max_parallel", c.max_parallel);
  f.get("timeout_seconds", c.timeout_seconds);
  f.get("max_attempts", c.max_attempts);
  f.get("backoff_base_seconds", c.backoff_base_seconds);
  f.get("window", c.window);
  f.get("strict", c.strict);
  f.finish();
  c.validate();
  return c;
}

Json to_json(const SimulatedFinetune& s) {
  Json j;
  j["task"] = task_name(s.task);
  j["window"] = s.window;
  j["ngram_min"] = s.vocab.n_min;
  j["ngram_max"] = s.vocab.n_max;
  j["min_doc_freq"] = s.vocab.min_doc_freq;
  j["max_vocab"] = s.vocab.max_size;
  Json t = to_json(s.train);
  t.erase("window");
  j["train"] = t;
  j["min_updates"] = s.min_updates;
  return j;
}

SimulatedFinetune simulated_finetune_from_json(const nlohmann::json& j) {
  SimulatedFinetune s;
  Fields f(j, "trainer config");
  if (const auto* t = f.raw("task")) {
    if (!t->is_string()) throw ValidationError("trainer config: task must be a string");
    s.task = parse_task(t->get<std::string>());
  }
  f.get("window", s.window);
  f.get("ngram_min", s.vocab.n_min);
  f.get("ngram_max", s.vocab.n_max);
  f.get("min_doc_freq", s.vocab.min_doc_freq);
  f.get("max_vocab", s.vocab.max_size);
  if (const auto* t = f.raw("train")) s.train = train_config_from_json(*t, s.train);
  f.get("min_updates", s.min_updates);
  f.finish();
  s.train.window = s.window;
  s.train.validate();
  if (s.vocab.n_min == 0 || s.vocab.n_min > s.vocab.n_max)
    throw ValidationError("trainer config: n-gram orders must satisfy 1 <= n_min <= n_max");
  return s;
}

Json to_json(const Attribution& a, Task task) {
  Json j;
  j["target_label"] = a.target_label;
  j["target_name"] = task_label_name(task, a.target_label);
  j["baseline_value"] = a.baseline_value;
  j["full_value"] = a.full_value;
  j["tokens"] = Json::array();
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    Json t;
    t["token"] = a.tokens[i];
    t["start"] = a.token_spans[i].start;
    t["end"] = a.token_spans[i].end;
    t["value"] = a.values[i];
    if (!a.std_errors.empty()) t["std_error"] = a.std_errors[i];
    j["tokens"].push_back(std::move(t));
  }
  return j;
}

Attribution attribution_from_json(const nlohmann::json& j) {
  try {
    Attribution a;
    a.target_label = j.at("target_label").get<std::size_t>();
    a.baseline_value = j.at("baseline_value").get<double>();
    a.full_value = j.at("full_value").get<double>();
    for (const auto& t : j.at("tokens")) {
      a.tokens.push_back(t.at("token").get<std::string>());
      a.token_spans.push_back({t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>()});
      a.values.push_back(t.at("value").get<double>());
      if (t.contains("std_error")) a.std_errors.push_back(t["std_error"].get<double>());
    }
    if (!a.std_errors.empty() && a.std_errors.size() != a.values.size())
      throw ValidationError("attribution: std_error present on only some tokens");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed attribution: ") + e.what());
  }
}

Json to_json(const LlmOutcome& o, Task task) {
  Json j;
  j["doc_id"] = o.doc_id;
  j["raw_response"] = o.raw_response;
  j["label"] = o.parsed.label ? Json(task_label_name(task, *o.parsed.label)) : Json(nullptr);
  j["invalid_reason"] =
      o.parsed.label ? Json(nullptr) : Json(invalid_reason_name(o.parsed.reason));
  j["attempts"] = o.attempts;
  j["http_status"] = o.http_status;
  j["latency_seconds"] = o.latency_seconds;
  j["error"] = o.error;
  return j;
}

}  // namespace lexsort
