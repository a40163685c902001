// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// lexsort command-line driver. Talks to the library only through the C API.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexsort/lexsort.h"

namespace {

using Json = nlohmann::ordered_json;
using Ptr = Json::json_pointer;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// A failed C call; carries the status for the exit code.
struct Failure {
  lxs_status status;
  std::string message;
};

void check(lxs_status s) {
  if (s != LXS_OK) throw Failure{s, lxs_last_error()};
}

[[noreturn]] void fail_validation(const std::string& msg) {
  throw Failure{LXS_ERR_VALIDATION, msg};
}

int exit_code_for(lxs_status s) {
  switch (s) {
    case LXS_ERR_VALIDATION:
    case LXS_ERR_TAXONOMY:
    case LXS_ERR_INVALID_ARGUMENT:
    case LXS_ERR_CONFIGURATION:
    case LXS_ERR_SIZE:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

// Owning wrappers for C handles and strings.
struct CString {
  char* p = nullptr;
  ~CString() { lxs_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Dataset = Handle<lxs_dataset, lxs_dataset_free>;
using Bundle = Handle<lxs_bundle, lxs_bundle_free>;
using Mock = Handle<lxs_mock_server, lxs_mock_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{LXS_ERR_IO, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) throw Failure{LXS_ERR_IO, "cannot write '" + path + "'"};
}

Json parse_json(const std::string& text, const std::string& what) {
  auto j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_validation(what + " is not valid JSON");
  return j;
}

std::string resolve(const char* kind, const Json& j) {
  CString out;
  check(lxs_config_resolve(kind, j.dump().c_str(), &out.p));
  return out.str();
}

Json resolved(const char* kind, const Json& j) { return Json::parse(resolve(kind, j)); }

std::string require_path(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg[key].is_string() || cfg[key].get_ref<const std::string&>().empty())
    fail_validation(std::string("missing required --") + key);
  return cfg[key].get<std::string>();
}

std::optional<std::string> optional_path(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg[key].is_null()) return std::nullopt;
  if (!cfg[key].is_string()) fail_validation(std::string(key) + " must be a path");
  return cfg[key].get<std::string>();
}

void require_existing(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("file not found: '" + path + "'");
}

void load_dataset(const std::string& path, Dataset& out) {
  require_existing(path);
  check(lxs_dataset_load(path.c_str(), &out.p));
}

bool is_count(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

const char* format_or_null(const Json& cfg) {
  if (!cfg.contains("format") || cfg["format"].is_null()) return nullptr;
  return cfg["format"].get_ref<const std::string&>().c_str();
}

// One subcommand: its config defaults, the flags that override them, and the
// pipeline that consumes the final config.
struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::string config_path;
  std::string manifest_path;
  Json defaults;
  std::vector<std::function<void(Json&)>> overrides;
  // Returns the resolved config, seeds and artifacts for the manifest.
  std::function<Json(Json& cfg)> run;

  template <typename T>
  CLI::Option* flag(const std::string& names, Ptr where, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(names, *value, help);
    overrides.push_back([opt, value, where](Json& cfg) {
      if (opt->count() > 0) cfg[where] = *value;
    });
    return opt;
  }

  template <typename T>
  CLI::Option* flag_with(const std::string& names, std::function<void(Json&, const T&)> apply,
                         const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(names, *value, help);
    overrides.push_back([opt, value, apply](Json& cfg) {
      if (opt->count() > 0) apply(cfg, *value);
    });
    return opt;
  }
};

Json load_config(const Command& c) {
  Json cfg = c.defaults;
  if (!c.config_path.empty()) {
    require_existing(c.config_path);
    Json file = parse_json(read_file(c.config_path), "config file");
    if (!file.is_object()) fail_validation("config file must hold a JSON object");
    if (file.contains("command") && file.contains("config")) {
      if (file["command"] != c.name)
        fail_validation("manifest was written by '" + file["command"].get<std::string>() +
                        "', not '" + c.name + "'");
      file = file["config"];
    }
    for (auto& [k, v] : file.items()) {
      if (!cfg.contains(k)) fail_validation("config file: unknown field '" + k + "'");
      cfg[k] = v;
    }
  }
  for (const auto& o : c.overrides) o(cfg);
  return cfg;
}

std::string default_manifest(const Json& cfg, const std::string& name) {
  if (cfg.contains("out") && cfg["out"].is_string()) return cfg["out"].get<std::string>() + ".manifest.json";
  std::string base = name;
  for (auto& ch : base)
    if (ch == ' ') ch = '-';
  return "lexsort-" + base + ".manifest.json";
}

int execute(Command& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Json cfg = load_config(c);
  Json info = c.run(cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json manifest;
  manifest["command"] = c.name;
  manifest["tool_version"] = lxs_version();
  manifest["config"] = cfg;
  manifest["seeds"] = info.value("seeds", Json::array());
  manifest["artifacts"] = info.value("artifacts", Json::object());
  manifest["duration_seconds"] = seconds;
  const std::string path = c.manifest_path.empty() ? default_manifest(cfg, c.name) : c.manifest_path;
  write_file(path, manifest.dump(2) + "\n");
  return 0;
}

Json split_defaults() { return Json{{"train", 0.76}, {"val", 0.12}, {"test", 0.12}}; }

void add_split_flags(Command& c) {
  c.flag_with<std::vector<double>>(
       "--split",
       [](Json& cfg, const std::vector<double>& v) {
         cfg["split"] = Json{{"train", v[0]}, {"val", v[1]}, {"test", v[2]}};
       },
       "train,val,test fractions")
      ->expected(3)
      ->delimiter(',');
  c.flag<std::uint64_t>("--split_seed", Ptr("/split_seed"), "seed of the split shuffle");
}

void add_vocab_flags(Command& c, const std::string& at) {
  c.flag<std::size_t>("--ngram_min", Ptr(at + "/ngram_min"), "smallest n-gram order");
  c.flag<std::size_t>("--ngram_max", Ptr(at + "/ngram_max"), "largest n-gram order");
  c.flag<std::size_t>("--min_doc_freq", Ptr(at + "/min_doc_freq"), "n-gram document frequency floor");
  c.flag<std::size_t>("--max_vocab", Ptr(at + "/max_vocab"), "vocabulary cap");
}

void add_branch_flags(Command& c, const std::string& at, const std::string& flag_prefix,
                      bool with_hidden) {
  c.flag<std::size_t>("--" + flag_prefix + "epochs", Ptr(at + "/epochs"), "training epochs");
  c.flag<std::size_t>("--" + flag_prefix + "batch_size", Ptr(at + "/batch_size"), "mini-batch size");
  c.flag<double>("--" + flag_prefix + "learning_rate", Ptr(at + "/learning_rate"), "step size");
  if (with_hidden)
    c.flag<std::size_t>("--" + flag_prefix + "hidden_size", Ptr(at + "/hidden_size"), "hidden units");
  c.flag<double>("--" + flag_prefix + "l2", Ptr(at + "/l2"), "weight decay");
  c.flag<double>("--" + flag_prefix + "clip_norm", Ptr(at + "/clip_norm"),
                 "gradient norm clip (0 = off)");
}

void add_ensemble_flags(Command& c) {
  c.flag<std::string>("--task", Ptr("/train/task"), "binary or multiclass");
  c.flag<std::size_t>("--window", Ptr("/train/window"), "context window in tokens");
  c.flag<double>("--alpha", Ptr("/train/alpha"), "fixed BOW weight (tuned when absent)");
  add_vocab_flags(c, "/train");
  c.flag<std::size_t>("--cnn_vocab_max", Ptr("/train/cnn_vocab_max"), "CNN vocabulary cap");
  add_branch_flags(c, "/train/bow", "", true);
  add_branch_flags(c, "/train/cnn", "cnn_", false);
  c.flag<std::size_t>("--embed_dim", Ptr("/train/cnn/embed_dim"), "CNN embedding width");
  c.flag<std::size_t>("--n_filters", Ptr("/train/cnn/n_filters"), "CNN filter count");
  c.flag<std::size_t>("--kernel_width", Ptr("/train/cnn/kernel_width"), "CNN kernel width");
  c.flag_with<std::uint64_t>(
      "--seed",
      [](Json& cfg, const std::uint64_t& s) {
        cfg["train"]["bow"]["seed"] = s;
        cfg["train"]["cnn"]["seed"] = s;
      },
      "initialization and shuffling seed of both branches");
}

// Loads the corpus named in cfg and splits it; config sections are resolved
// in place so the manifest records every default.
void corpus_split(Json& cfg, Dataset& train, Dataset& val, Dataset& test) {
  cfg["split"] = resolved("split", cfg["split"]);
  if (!is_count(cfg["split_seed"])) fail_validation("split_seed must be a count");
  Dataset all;
  load_dataset(require_path(cfg, "corpus"), all);
  check(lxs_dataset_split(all.p, cfg["split"].dump().c_str(), cfg["split_seed"].get<std::uint64_t>(),
                          &train.p, &val.p, &test.p));
}

Json noise_option(const Json& cfg) {
  return Json{{"noise_rate", cfg.value("noise_rate", Json(nullptr))}};
}

// ---- subcommands -------------------------------------------------------

void setup_generate(Command& c) {
  c.defaults = Json{{"corpus", Json::object()}, {"out", nullptr}};
  c.flag<std::size_t>("--n_documents,--n", Ptr("/corpus/n_documents"), "documents to generate");
  c.flag<double>("--noise_rate,--noise", Ptr("/corpus/noise_rate"), "label noise rate");
  c.flag<std::uint64_t>("--seed", Ptr("/corpus/seed"), "generator seed");
  c.flag<std::vector<double>>("--class_mix", Ptr("/corpus/class_mix"),
                              "ten category weights (nine subclasses, then Other)")
      ->delimiter(',');
  c.flag<std::vector<std::size_t>>("--doc_length_range", Ptr("/corpus/doc_length_range"),
                                   "min_tokens,max_tokens")
      ->expected(2)
      ->delimiter(',');
  c.flag<std::size_t>("--boilerplate_vocab_size", Ptr("/corpus/boilerplate_vocab_size"),
                      "filler vocabulary size");
  c.flag<std::size_t>("--min_signatures", Ptr("/corpus/min_signatures"), "signature phrases per doc, low");
  c.flag<std::size_t>("--max_signatures", Ptr("/corpus/max_signatures"), "signature phrases per doc, high");
  c.flag_with<std::string>(
      "--signature_position",
      [](Json& cfg, const std::string& v) {
        const std::string tag = "after_offset:";
        if (v == "uniform") {
          cfg["corpus"]["signature_position"] = "uniform";
        } else if (v.rfind(tag, 0) == 0) {
          try {
            cfg["corpus"]["signature_position"] =
                Json{{"after_offset", std::stoull(v.substr(tag.size()))}};
          } catch (const std::exception&) {
            fail_validation("--signature_position after_offset needs a token count");
          }
        } else {
          fail_validation("--signature_position must be uniform or after_offset:<k>");
        }
      },
      "uniform or after_offset:<k>");
  c.flag<std::string>("--out", Ptr("/out"), "output JSONL");
  c.run = [](Json& cfg) {
    cfg["corpus"] = resolved("corpus", cfg["corpus"]);
    const std::string out = require_path(cfg, "out");
    Dataset d;
    check(lxs_corpus_generate(cfg["corpus"].dump().c_str(), &d.p));
    check(lxs_dataset_save(d.p, out.c_str()));
    std::cout << "wrote " << lxs_dataset_size(d.p) << " documents to " << out << "\n";
    return Json{{"seeds", Json::array({cfg["corpus"]["seed"]})}, {"artifacts", {{"corpus", out}}}};
  };
}

void setup_train(Command& c) {
  c.defaults = Json{{"corpus", nullptr},     {"split", split_defaults()}, {"split_seed", 1},
                    {"train", Json::object()}, {"out", nullptr},          {"test_out", nullptr},
                    {"summary_out", nullptr}};
  c.flag<std::string>("--corpus", Ptr("/corpus"), "input JSONL");
  add_split_flags(c);
  add_ensemble_flags(c);
  c.flag<std::string>("--out", Ptr("/out"), "output bundle");
  c.flag<std::string>("--test_out", Ptr("/test_out"), "write the held-out test split here");
  c.flag<std::string>("--summary_out", Ptr("/summary_out"), "write the training summary here");
  c.run = [](Json& cfg) {
    cfg["train"] = resolved("train", cfg["train"]);
    const std::string out = require_path(cfg, "out");
    Dataset train, val, test;
    corpus_split(cfg, train, val, test);
    Bundle b;
    CString summary;
    check(lxs_train(train.p, val.p, cfg["train"].dump().c_str(), &b.p, &summary.p));
    check(lxs_bundle_save(b.p, out.c_str()));
    Json artifacts{{"bundle", out}};
    if (auto p = optional_path(cfg, "test_out")) {
      check(lxs_dataset_save(test.p, p->c_str()));
      artifacts["test"] = *p;
    }
    if (auto p = optional_path(cfg, "summary_out")) {
      write_file(*p, summary.str());
      artifacts["summary"] = *p;
    }
    const Json s = Json::parse(summary.str());
    std::cout << "validation accuracy " << s["val_accuracy"].get<double>() << ", alpha "
              << s["alpha"].get<double>() << "\n";
    return Json{{"seeds", Json::array({cfg["split_seed"], cfg["train"]["bow"]["seed"],
                                      cfg["train"]["cnn"]["seed"]})},
                {"artifacts", artifacts}};
  };
}

void setup_evaluate(Command& c) {
  c.defaults = Json{{"bundle", nullptr}, {"data", nullptr}, {"noise_rate", nullptr},
                    {"out", nullptr},    {"format", nullptr}};
  c.flag<std::string>("--bundle", Ptr("/bundle"), "model bundle");
  c.flag<std::string>("--data", Ptr("/data"), "JSONL to score");
  c.flag<double>("--noise_rate", Ptr("/noise_rate"), "noise rate of the data, for the ceiling line");
  c.flag<std::string>("--out", Ptr("/out"), "report path");
  c.flag<std::string>("--format", Ptr("/format"), "json or csv (default: from extension)");
  c.run = [](Json& cfg) {
    const std::string bundle_path = require_path(cfg, "bundle");
    const std::string out = require_path(cfg, "out");
    require_existing(bundle_path);
    Bundle b;
    check(lxs_bundle_load(bundle_path.c_str(), &b.p));
    Dataset d;
    load_dataset(require_path(cfg, "data"), d);
    CString report;
    check(lxs_evaluate(b.p, d.p, noise_option(cfg).dump().c_str(), &report.p));
    check(lxs_report_write(LXS_REPORT_METRICS, report.p, format_or_null(cfg), out.c_str()));
    std::cout << "accuracy " << Json::parse(report.str())["accuracy"].get<double>() << "\n";
    return Json{{"seeds", Json::array()}, {"artifacts", {{"report", out}}}};
  };
}

void setup_hpo(Command& c) {
  c.defaults = Json{{"corpus", nullptr},      {"split", split_defaults()}, {"split_seed", 1},
                    {"grid", nullptr},        {"train", Json::object()},   {"noise_rate", nullptr},
                    {"out", nullptr},         {"format", nullptr}};
  c.flag<std::string>("--corpus", Ptr("/corpus"), "input JSONL");
  add_split_flags(c);
  c.flag<std::vector<std::size_t>>("--grid", Ptr("/grid"), "ascending context windows")
      ->delimiter(',');
  add_ensemble_flags(c);
  c.flag<double>("--noise_rate", Ptr("/noise_rate"), "noise rate of the corpus");
  c.flag<std::string>("--out", Ptr("/out"), "report path");
  c.flag<std::string>("--format", Ptr("/format"), "json or csv (default: from extension)");
  c.run = [](Json& cfg) {
    cfg["train"] = resolved("train", cfg["train"]);
    const std::string out = require_path(cfg, "out");
    Dataset train, val, test;
    corpus_split(cfg, train, val, test);
    Json opts = noise_option(cfg);
    opts["train"] = cfg["train"];
    if (!cfg["grid"].is_null()) opts["grid"] = cfg["grid"];
    CString report;
    check(lxs_hpo(train.p, val.p, opts.dump().c_str(), &report.p));
    cfg["grid"] = Json::parse(report.str())["grid"];
    check(lxs_report_write(LXS_REPORT_HPO, report.p, format_or_null(cfg), out.c_str()));
    std::cout << "chosen window " << Json::parse(report.str())["chosen_window"].get<std::size_t>()
              << "\n";
    return Json{{"seeds", Json::array({cfg["split_seed"], cfg["train"]["bow"]["seed"],
                                      cfg["train"]["cnn"]["seed"]})},
                {"artifacts", {{"report", out}}}};
  };
}

void setup_curve(Command& c) {
  c.defaults = Json{{"corpus", nullptr},      {"split", split_defaults()}, {"split_seed", 1},
                    {"sizes", nullptr},       {"seeds", nullptr},          {"trainer", Json::object()},
                    {"noise_rate", nullptr},  {"out", nullptr},            {"format", nullptr}};
  c.flag<std::string>("--corpus", Ptr("/corpus"), "input JSONL; the train split is the pool");
  add_split_flags(c);
  c.flag<std::vector<std::size_t>>("--sizes", Ptr("/sizes"), "ascending fine-tune set sizes")
      ->delimiter(',');
  c.flag<std::vector<std::uint64_t>>("--seeds", Ptr("/seeds"), "subset seeds")->delimiter(',');
  c.flag<std::string>("--task", Ptr("/trainer/task"), "binary or multiclass");
  c.flag<std::size_t>("--window", Ptr("/trainer/window"), "context window in tokens");
  add_vocab_flags(c, "/trainer");
  add_branch_flags(c, "/trainer/train", "", true);
  c.flag<std::uint64_t>("--train_seed", Ptr("/trainer/train/seed"), "trainer initialization seed");
  c.flag<std::size_t>("--min_updates", Ptr("/trainer/min_updates"), "gradient step floor per run");
  c.flag<double>("--noise_rate", Ptr("/noise_rate"), "noise rate of the corpus");
  c.flag<std::string>("--out", Ptr("/out"), "report path");
  c.flag<std::string>("--format", Ptr("/format"), "json or csv (default: from extension)");
  c.run = [](Json& cfg) {
    cfg["trainer"] = resolved("trainer", cfg["trainer"]);
    if (cfg["sizes"].is_null()) cfg["sizes"] = Json::array({200, 600, 900, 1200, 2000});
    if (cfg["seeds"].is_null()) cfg["seeds"] = Json::array({1, 2, 3});
    const std::string out = require_path(cfg, "out");
    Dataset train, val, test;
    corpus_split(cfg, train, val, test);
    Json opts = noise_option(cfg);
    opts["trainer"] = cfg["trainer"];
    opts["sizes"] = cfg["sizes"];
    opts["seeds"] = cfg["seeds"];
    CString report;
    check(lxs_curve(train.p, test.p, opts.dump().c_str(), &report.p));
    check(lxs_report_write(LXS_REPORT_CURVE, report.p, format_or_null(cfg), out.c_str()));
    std::cout << "wrote " << cfg["sizes"].size() << " curve points to " << out << "\n";
    Json seeds = cfg["seeds"];
    seeds.push_back(cfg["split_seed"]);
    return Json{{"seeds", seeds}, {"artifacts", {{"report", out}}}};
  };
}

void setup_explain(Command& c) {
  c.defaults = Json{{"bundle", nullptr},        {"data", nullptr},   {"doc_id", nullptr},
                    {"method", "sampled"},      {"n_permutations", 2000}, {"seed", 1},
                    {"target", nullptr},        {"format", "html"},  {"out", nullptr},
                    {"attribution_out", nullptr}};
  c.flag<std::string>("--bundle", Ptr("/bundle"), "model bundle");
  c.flag<std::string>("--data", Ptr("/data"), "JSONL holding the document");
  c.flag<std::string>("--doc_id", Ptr("/doc_id"), "document to explain");
  c.flag<std::string>("--method", Ptr("/method"), "exact or sampled");
  c.flag<std::size_t>("--n_permutations", Ptr("/n_permutations"), "permutations for sampled");
  c.flag<std::uint64_t>("--seed", Ptr("/seed"), "permutation seed");
  c.flag<std::string>("--target", Ptr("/target"), "label name (default: predicted label)");
  c.flag<std::string>("--format", Ptr("/format"), "html or ansi");
  c.flag<std::string>("--out", Ptr("/out"), "overlay path (default: standard output)");
  c.flag<std::string>("--attribution_out", Ptr("/attribution_out"), "write token values as JSON");
  c.run = [](Json& cfg) {
    const std::string bundle_path = require_path(cfg, "bundle");
    require_existing(bundle_path);
    Bundle b;
    check(lxs_bundle_load(bundle_path.c_str(), &b.p));
    Dataset d;
    load_dataset(require_path(cfg, "data"), d);
    CString text;
    check(lxs_dataset_text(d.p, require_path(cfg, "doc_id").c_str(), &text.p));
    const Json opts{{"method", cfg["method"]},
                    {"n_permutations", cfg["n_permutations"]},
                    {"seed", cfg["seed"]},
                    {"target", cfg["target"]}};
    CString attribution;
    check(lxs_explain(b.p, text.p, opts.dump().c_str(), &attribution.p));
    if (!cfg["format"].is_string()) fail_validation("format must be html or ansi");
    CString overlay;
    check(lxs_render_overlay(text.p, attribution.p, cfg["format"].get<std::string>().c_str(),
                             &overlay.p));
    Json artifacts = Json::object();
    if (auto p = optional_path(cfg, "out")) {
      write_file(*p, overlay.str());
      artifacts["overlay"] = *p;
    } else {
      std::cout << overlay.str() << "\n";
    }
    if (auto p = optional_path(cfg, "attribution_out")) {
      write_file(*p, attribution.str());
      artifacts["attribution"] = *p;
    }
    return Json{{"seeds", Json::array({cfg["seed"]})}, {"artifacts", artifacts}};
  };
}

void setup_llm_classify(Command& c) {
  c.defaults = Json{{"data", nullptr}, {"llm", Json::object()}, {"out", nullptr}};
  c.flag<std::string>("--data", Ptr("/data"), "JSONL to classify");
  c.flag<std::string>("--task", Ptr("/llm/task"), "binary or multiclass");
  c.flag<std::string>("--base_url", Ptr("/llm/base_url"), "endpoint root");
  c.flag<std::string>("--model_name", Ptr("/llm/model_name"), "model identifier");
  c.flag<std::size_t>("--max_parallel", Ptr("/llm/max_parallel"), "requests in flight");
  c.flag<double>("--timeout_seconds", Ptr("/llm/timeout_seconds"), "per-request timeout");
  c.flag<std::size_t>("--max_attempts", Ptr("/llm/max_attempts"), "attempts per document");
  c.flag<double>("--backoff_base_seconds", Ptr("/llm/backoff_base_seconds"), "first retry delay");
  c.flag<std::size_t>("--window", Ptr("/llm/window"), "prompt truncation in tokens");
  auto strict = std::make_shared<bool>(false);
  CLI::Option* strict_opt =
      c.app->add_flag("--strict", *strict, "accept only exact label names");
  c.overrides.push_back([strict_opt, strict](Json& cfg) {
    if (strict_opt->count() > 0) cfg["llm"]["strict"] = *strict;
  });
  c.flag<std::string>("--out", Ptr("/out"), "outcomes report (JSON)");
  c.run = [](Json& cfg) {
    cfg["llm"] = resolved("llm", cfg["llm"]);
    const std::string out = require_path(cfg, "out");
    Dataset d;
    load_dataset(require_path(cfg, "data"), d);
    CString report;
    check(lxs_llm_classify(d.p, cfg["llm"].dump().c_str(), &report.p));
    write_file(out, report.str());
    const Json r = Json::parse(report.str());
    std::cout << "accuracy " << r["metrics"]["accuracy"].get<double>() << ", invalid "
              << r["metrics"]["invalid_count"].get<std::size_t>() << "\n";
    return Json{{"seeds", Json::array()}, {"artifacts", {{"report", out}}}};
  };
}

void setup_build_finetune(Command& c) {
  c.defaults = Json{{"data", nullptr}, {"task", "binary"}, {"window", 800}, {"out", nullptr}};
  c.flag<std::string>("--data", Ptr("/data"), "input JSONL");
  c.flag<std::string>("--task", Ptr("/task"), "binary or multiclass");
  c.flag<std::size_t>("--window", Ptr("/window"), "truncation in tokens");
  c.flag<std::string>("--out", Ptr("/out"), "chat-format JSONL");
  c.run = [](Json& cfg) {
    const std::string out = require_path(cfg, "out");
    if (!cfg["task"].is_string()) fail_validation("task must be a string");
    if (!is_count(cfg["window"])) fail_validation("window must be a count");
    Dataset d;
    load_dataset(require_path(cfg, "data"), d);
    std::size_t n = 0;
    check(lxs_llm_build_finetune(d.p, cfg["task"].get<std::string>().c_str(),
                                 cfg["window"].get<std::size_t>(), out.c_str(), &n));
    std::cout << "wrote " << n << " records to " << out << "\n";
    return Json{{"seeds", Json::array()}, {"artifacts", {{"finetune", out}}}};
  };
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void setup_mock_serve(Command& c) {
  c.defaults = Json{{"script", nullptr}, {"host", "127.0.0.1"}, {"port", 0}, {"port_file", nullptr},
                    {"requests_out", nullptr}};
  c.flag<std::string>("--script", Ptr("/script"), "JSON array of scripted responses");
  c.flag<std::string>("--host", Ptr("/host"), "bind address");
  c.flag<int>("--port", Ptr("/port"), "bind port (0 = any free port)");
  c.flag<std::string>("--port_file", Ptr("/port_file"), "write the bound port here");
  c.flag<std::string>("--requests_out", Ptr("/requests_out"), "on shutdown, write received requests");
  c.run = [](Json& cfg) {
    const std::string script_path = require_path(cfg, "script");
    require_existing(script_path);
    const std::string script = read_file(script_path);
    Mock m;
    check(lxs_mock_start(script.c_str(), cfg["host"].get<std::string>().c_str(),
                         cfg["port"].get<int>(), &m.p));
    const int port = lxs_mock_port(m.p);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    Json artifacts = Json::object();
    if (auto p = optional_path(cfg, "port_file")) {
      write_file(*p, std::to_string(port) + "\n");
      artifacts["port_file"] = *p;
    }
    std::cout << "serving on http://" << cfg["host"].get<std::string>() << ":" << port
              << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (auto p = optional_path(cfg, "requests_out")) {
      CString reqs;
      check(lxs_mock_requests(m.p, &reqs.p));
      write_file(*p, reqs.str() + "\n");
      artifacts["requests"] = *p;
    }
    return Json{{"seeds", Json::array()}, {"artifacts", artifacts}};
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexsort: courthouse record classification experiments"};
  app.set_version_flag("--version", std::string(lxs_version()));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](CLI::App* parent, const std::string& name, const std::string& full_name,
                 const std::string& help, void (*setup)(Command&)) {
    auto c = std::make_unique<Command>();
    c->name = full_name;
    c->app = parent->add_subcommand(name, help);
    c->app->add_option("--config", c->config_path, "JSON config or run manifest");
    c->app->add_option("--manifest", c->manifest_path,
                       "manifest path (default: <out>.manifest.json)");
    setup(*c);
    commands.push_back(std::move(c));
  };
  add(&app, "generate", "generate", "generate a synthetic corpus", setup_generate);
  add(&app, "train", "train", "train the ensemble on a corpus split", setup_train);
  add(&app, "evaluate", "evaluate", "score a bundle on a JSONL file", setup_evaluate);
  add(&app, "hpo", "hpo", "context window search", setup_hpo);
  add(&app, "explain", "explain", "token attributions as an overlay", setup_explain);
  add(&app, "curve", "curve", "learning curve of the simulated fine-tune", setup_curve);
  add(&app, "mock-serve", "mock-serve", "serve a scripted chat endpoint", setup_mock_serve);
  CLI::App* llm = app.add_subcommand("llm", "remote classification tools");
  llm->require_subcommand(1);
  add(llm, "classify", "llm classify", "classify documents through a chat endpoint",
      setup_llm_classify);
  add(llm, "build-finetune", "llm build-finetune", "write a chat-format fine-tune file",
      setup_build_finetune);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      return execute(*c);
    } catch (const Failure& f) {
      std::cerr << "lexsort " << c->name << ": " << lxs_status_name(f.status) << " error: "
                << f.message << "\n";
      return exit_code_for(f.status);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "lexsort " << c->name << ": validation error: " << e.what() << "\n";
      return kExitValidation;
    } catch (const std::exception& e) {
      std::cerr << "lexsort " << c->name << ": error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitValidation;
}
