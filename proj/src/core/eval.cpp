// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lexsort {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string num(double v) { return nlohmann::json(v).dump(); }

ordered_json meta_json(const ReportMeta& meta) {
  ordered_json j;
  j["chance_level"] = meta.chance_level;
  j["chance_note"] = meta.chance_note;
  j["noise_rate"] = meta.noise_rate ? ordered_json(*meta.noise_rate) : ordered_json(nullptr);
  j["noise_ceiling"] =
      meta.noise_ceiling ? ordered_json(*meta.noise_ceiling) : ordered_json(nullptr);
  return j;
}

ReportMeta meta_from_json(const nlohmann::json& j) {
  ReportMeta m;
  m.chance_level = j.at("chance_level").get<double>();
  m.chance_note = j.at("chance_note").get<std::string>();
  if (!j.at("noise_rate").is_null()) m.noise_rate = j.at("noise_rate").get<double>();
  if (!j.at("noise_ceiling").is_null()) m.noise_ceiling = j.at("noise_ceiling").get<double>();
  return m;
}

nlohmann::json parse_report(std::string_view text, std::string_view type) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("report is not a JSON object");
  if (j.value("type", std::string()) != type)
    throw ValidationError("expected a " + std::string(type) + " report");
  return j;
}

template <typename Fn>
auto with_json_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void emit(const std::string& json_text, const std::string& csv_text, const ReportMeta& meta,
          ReportFormat format, const std::filesystem::path& path) {
  if (format == ReportFormat::kJson) {
    write_text_file(path, json_text);
    return;
  }
  write_text_file(path, csv_text);
  write_text_file(meta_path(path), meta_json(meta).dump(2) + "\n");
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

Metrics evaluate(const std::vector<Prediction>& predictions,
                 const std::vector<std::size_t>& truths, Task task) {
  if (predictions.size() != truths.size())
    throw ValidationError("predictions and truths differ in length (" +
                          std::to_string(predictions.size()) + " vs " +
                          std::to_string(truths.size()) + ")");
  if (truths.empty()) throw ValidationError("evaluate needs at least one item");
  const std::size_t k = task_label_count(task);
  Metrics m;
  m.task = task;
  m.n = truths.size();
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= k) throw ValidationError("truth label index out of range");
    if (!predictions[i]) {
      ++m.invalid_count;
      continue;
    }
    if (*predictions[i] >= k) throw ValidationError("predicted label index out of range");
    ++m.confusion[truths[i]][*predictions[i]];
    if (*predictions[i] == truths[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  if (task == Task::kBinary) {
    const auto og = *task_index(Label::oil_and_gas(Subclass::kOilAndGasLease), task);
    const auto other = *task_index(Label::other(), task);
    const std::size_t fp = m.confusion[other][og];
    std::size_t negatives = 0;
    for (auto t : truths)
      if (t == other) ++negatives;
    m.false_positive_rate =
        negatives == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(negatives);
    m.false_positive_share = static_cast<double>(fp) / static_cast<double>(m.n);
  }
  return m;
}

Metrics evaluate_bundle(const ModelBundle& bundle, const Dataset& data_in) {
  const Dataset data = filter_for_task(data_in, bundle.task);
  std::vector<Prediction> preds;
  preds.reserve(data.size());
  for (const auto& d : data) preds.emplace_back(predict(bundle, d.text).label);
  return evaluate(preds, observed_task_indices(data, bundle.task), bundle.task);
}

std::vector<std::size_t> default_window_grid(Task task) {
  if (task == Task::kBinary) return {100, 200, 400, 800, 1500};
  return {200, 400, 800, 1500, 3000};
}

std::size_t choose_window(const std::vector<std::size_t>& grid,
                          const std::vector<double>& accuracy) {
  if (grid.empty() || grid.size() != accuracy.size())
    throw ValidationError("grid and accuracies must be non-empty and of equal length");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (accuracy[i] > accuracy[best] || (accuracy[i] == accuracy[best] && grid[i] < grid[best]))
      best = i;
  return grid[best];
}

HpoResult hpo_context_window(const std::vector<std::size_t>& grid, const Dataset& train,
                             const Dataset& val, Task task, const EnsembleConfig& base) {
  if (grid.empty()) throw ValidationError("window grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0) throw ValidationError("window grid entries must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw ValidationError("window grid must be strictly ascending");
  }
  HpoResult r;
  r.task = task;
  r.grid = grid;
  for (auto w : grid) {
    EnsembleConfig c = base;
    c.task = task;
    c.window = w;
    c.bow.window = w;
    c.cnn.window = w;
    try {
      r.val_accuracy.push_back(train_ensemble(train, val, c).val_accuracy);
    } catch (const Error& e) {
      throw TrainingError("training with window " + std::to_string(w) + " failed: " + e.what());
    }
  }
  r.chosen_window = choose_window(r.grid, r.val_accuracy);
  return r;
}

std::vector<LearningCurvePoint> learning_curve(const std::vector<std::size_t>& sizes,
                                               const std::vector<std::uint64_t>& seeds,
                                               const CurveTrainer& trainer, const Dataset& pool,
                                               const Dataset& test) {
  if (sizes.empty() || seeds.empty()) throw ValidationError("sizes and seeds must be non-empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ValidationError("curve sizes must be >= 1");
    if (i > 0 && sizes[i] < sizes[i - 1]) throw ValidationError("curve sizes must be ascending");
  }
  if (sizes.back() > pool.size())
    throw ValidationError("curve size " + std::to_string(sizes.back()) + " exceeds the pool of " +
                          std::to_string(pool.size()) + " documents");

  std::vector<std::vector<double>> acc(sizes.size());
  for (auto seed : seeds) {
    auto order = iota_indices(pool.size());
    Rng rng(seed);
    rng.shuffle(order);
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      std::vector<Document> docs;
      docs.reserve(sizes[s]);
      for (std::size_t i = 0; i < sizes[s]; ++i) docs.push_back(pool[order[i]]);
      const Dataset subset(std::move(docs), pool.provenance() + " subset n=" +
                                                std::to_string(sizes[s]) +
                                                " seed=" + std::to_string(seed));
      acc[s].push_back(trainer(subset, test, seed));
    }
  }
  std::vector<LearningCurvePoint> out;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    // Sorted so the aggregate does not depend on the order of `seeds`.
    std::sort(acc[s].begin(), acc[s].end());
    double sum = 0.0;
    for (double a : acc[s]) sum += a;
    double mean = sum / static_cast<double>(acc[s].size());
    // A plain sum can round identical runs off their common value.
    if (acc[s].front() == acc[s].back()) mean = acc[s].front();
    out.push_back({sizes[s], mean, sample_std(acc[s], mean), acc[s].size()});
  }
  return out;
}

double SimulatedFinetune::operator()(const Dataset& subset_in, const Dataset& test_in,
                                     std::uint64_t seed) const {
  train.validate();
  const Dataset subset = filter_for_task(subset_in, task);
  const Dataset test = filter_for_task(test_in, task);
  if (subset.size() < 2) throw ValidationError("fine-tune subset needs at least 2 documents");

  auto order = iota_indices(subset.size());
  Rng rng(mix_seed(seed, 0x66696e65ULL));
  rng.shuffle(order);
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(subset.size()))), 1,
      subset.size() - 1);

  const auto labels = observed_task_indices(subset, task);
  std::vector<TokenSequence> seqs;
  seqs.reserve(subset.size());
  for (const auto& d : subset) seqs.push_back(truncate(tokenize(d.text), window));
  std::vector<TokenSequence> train_seqs;
  for (std::size_t i = n_val; i < order.size(); ++i) train_seqs.push_back(seqs[order[i]]);
  const Vocab vocab = build_vocab(train_seqs, this->vocab);

  std::vector<LabeledVector> tr, va;
  for (std::size_t i = 0; i < order.size(); ++i) {
    LabeledVector ex{vectorize(seqs[order[i]], vocab, window), labels[order[i]]};
    (i < n_val ? va : tr).push_back(std::move(ex));
  }
  TrainConfig cfg = train;
  cfg.window = window;
  cfg.seed = mix_seed(train.seed, seed);
  const std::size_t steps_per_epoch = (tr.size() + cfg.batch_size - 1) / cfg.batch_size;
  cfg.epochs = std::max(cfg.epochs, (min_updates + steps_per_epoch - 1) / steps_per_epoch);
  BowNet net = bow_init(vocab.size(), cfg.hidden_size, task_label_count(task), cfg.seed);
  net.input_weight = idf_weights(vocab, train_seqs.size());
  const BowNet trained = bow_train(std::move(net), tr, va, cfg).net;

  const auto test_labels = observed_task_indices(test, task);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto x = vectorize(truncate(tokenize(test[i].text), window), vocab, window);
    if (argmax(bow_forward(trained, x)) == test_labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<std::size_t> default_curve_sizes() { return {200, 600, 900, 1200, 2000}; }

ReportMeta ReportMeta::for_task(Task task, std::optional<double> noise_rate) {
  ReportMeta m;
  m.chance_level = 1.0 / static_cast<double>(task_label_count(task));
  m.noise_rate = noise_rate;
  if (noise_rate) m.noise_ceiling = lexsort::noise_ceiling(*noise_rate);
  return m;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw ValidationError("unknown report format '" + std::string(name) + "' (json, csv)");
}

ReportFormat report_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::kCsv : ReportFormat::kJson;
}

std::string metrics_json(const Metrics& m, const ReportMeta& meta) {
  ordered_json j;
  j["type"] = "metrics";
  j["task"] = task_name(m.task);
  j["labels"] = task_label_names(m.task);
  j["n"] = m.n;
  j["accuracy"] = m.accuracy;
  j["confusion"] = m.confusion;
  j["invalid_count"] = m.invalid_count;
  j["false_positive_rate"] =
      m.false_positive_rate ? ordered_json(*m.false_positive_rate) : ordered_json(nullptr);
  j["false_positive_share"] =
      m.false_positive_share ? ordered_json(*m.false_positive_share) : ordered_json(nullptr);
  j["metadata"] = meta_json(meta);
  return j.dump(2) + "\n";
}

std::string curve_json(const std::vector<LearningCurvePoint>& curve, const ReportMeta& meta) {
  ordered_json j;
  j["type"] = "learning_curve";
  j["points"] = ordered_json::array();
  for (const auto& p : curve)
    j["points"].push_back({{"n_finetune_docs", p.n_finetune_docs},
                           {"mean_accuracy", p.mean_accuracy},
                           {"std_accuracy", p.std_accuracy},
                           {"n_seeds", p.n_seeds}});
  j["metadata"] = meta_json(meta);
  return j.dump(2) + "\n";
}

std::string hpo_json(const HpoResult& h, const ReportMeta& meta) {
  ordered_json j;
  j["type"] = "hpo";
  j["task"] = task_name(h.task);
  j["grid"] = h.grid;
  j["val_accuracy"] = h.val_accuracy;
  j["chosen_window"] = h.chosen_window;
  j["metadata"] = meta_json(meta);
  return j.dump(2) + "\n";
}

std::string metrics_csv(const Metrics& m) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "n," << m.n << "\n";
  out << "accuracy," << num(m.accuracy) << "\n";
  out << "invalid_count," << m.invalid_count << "\n";
  if (m.false_positive_rate) out << "false_positive_rate," << num(*m.false_positive_rate) << "\n";
  if (m.false_positive_share)
    out << "false_positive_share," << num(*m.false_positive_share) << "\n";
  for (std::size_t t = 0; t < m.confusion.size(); ++t)
    for (std::size_t p = 0; p < m.confusion[t].size(); ++p)
      out << "confusion[" << t << "][" << p << "]," << m.confusion[t][p] << "\n";
  return out.str();
}

std::string curve_csv(const std::vector<LearningCurvePoint>& curve) {
  std::ostringstream out;
  out << "n_docs,mean_accuracy,std_accuracy,n_seeds\n";
  for (const auto& p : curve)
    out << p.n_finetune_docs << ',' << num(p.mean_accuracy) << ',' << num(p.std_accuracy) << ','
        << p.n_seeds << "\n";
  return out.str();
}

std::string hpo_csv(const HpoResult& h) {
  std::ostringstream out;
  out << "window,val_accuracy,chosen\n";
  for (std::size_t i = 0; i < h.grid.size(); ++i)
    out << h.grid[i] << ',' << num(h.val_accuracy[i]) << ','
        << (h.grid[i] == h.chosen_window ? 1 : 0) << "\n";
  return out.str();
}

void emit_report(const Metrics& m, const ReportMeta& meta, ReportFormat format,
                 const std::filesystem::path& path) {
  emit(metrics_json(m, meta), metrics_csv(m), meta, format, path);
}

void emit_report(const std::vector<LearningCurvePoint>& curve, const ReportMeta& meta,
                 ReportFormat format, const std::filesystem::path& path) {
  emit(curve_json(curve, meta), curve_csv(curve), meta, format, path);
}

void emit_report(const HpoResult& h, const ReportMeta& meta, ReportFormat format,
                 const std::filesystem::path& path) {
  emit(hpo_json(h, meta), hpo_csv(h), meta, format, path);
}

Metrics parse_metrics_json(std::string_view text, ReportMeta* meta) {
  return with_json_errors([&]() {
    const auto j = parse_report(text, "metrics");
    Metrics m;
    m.task = parse_task(j.at("task").get<std::string>());
    m.n = j.at("n").get<std::size_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    m.invalid_count = j.at("invalid_count").get<std::size_t>();
    if (!j.at("false_positive_rate").is_null())
      m.false_positive_rate = j.at("false_positive_rate").get<double>();
    if (!j.at("false_positive_share").is_null())
      m.false_positive_share = j.at("false_positive_share").get<double>();
    if (meta) *meta = meta_from_json(j.at("metadata"));
    return m;
  });
}

std::vector<LearningCurvePoint> parse_curve_json(std::string_view text, ReportMeta* meta) {
  return with_json_errors([&]() {
    const auto j = parse_report(text, "learning_curve");
    std::vector<LearningCurvePoint> out;
    for (const auto& p : j.at("points"))
      out.push_back({p.at("n_finetune_docs").get<std::size_t>(),
                     p.at("mean_accuracy").get<double>(), p.at("std_accuracy").get<double>(),
                     p.at("n_seeds").get<std::size_t>()});
    if (meta) *meta = meta_from_json(j.at("metadata"));
    return out;
  });
}

HpoResult parse_hpo_json(std::string_view text, ReportMeta* meta) {
  return with_json_errors([&]() {
    const auto j = parse_report(text, "hpo");
    HpoResult h;
    h.task = parse_task(j.at("task").get<std::string>());
    h.grid = j.at("grid").get<std::vector<std::size_t>>();
    h.val_accuracy = j.at("val_accuracy").get<std::vector<double>>();
    h.chosen_window = j.at("chosen_window").get<std::size_t>();
    if (meta) *meta = meta_from_json(j.at("metadata"));
    return h;
  });
}

std::vector<LearningCurvePoint> parse_curve_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "n_docs,mean_accuracy,std_accuracy,n_seeds")
    throw ValidationError("curve CSV has an unexpected header");
  std::vector<LearningCurvePoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4)
      throw ValidationError("curve CSV line " + std::to_string(line_no) + " needs 4 fields");
    try {
      out.push_back({std::stoul(f[0]), std::stod(f[1]), std::stod(f[2]), std::stoul(f[3])});
    } catch (const std::exception&) {
      throw ValidationError("curve CSV line " + std::to_string(line_no) + " is not numeric");
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lexsort
