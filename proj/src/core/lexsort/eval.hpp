// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Metrics, context-window search, fine-tuning learning curves and
// plot-ready JSON/CSV reports.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexsort/corpus.hpp"
#include "lexsort/ensemble.hpp"

namespace lexsort {

// A task-level label index, or nullopt for an invalid (unparseable) output.
using Prediction = std::optional<std::size_t>;

struct Metrics {
  Task task = Task::kBinary;
  std::size_t n = 0;
  double accuracy = 0.0;
  // rows = truth, columns = prediction; invalid predictions are not counted
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t invalid_count = 0;
  // Binary only: FP / (truth Other) and FP / n.
  std::optional<double> false_positive_rate;
  std::optional<double> false_positive_share;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics evaluate(const std::vector<Prediction>& predictions,
                 const std::vector<std::size_t>& truths, Task task);

// Predicts every task document of `data` and scores against observed labels.
Metrics evaluate_bundle(const ModelBundle& bundle, const Dataset& data);

struct HpoResult {
  Task task = Task::kBinary;
  std::vector<std::size_t> grid;
  std::vector<double> val_accuracy;
  std::size_t chosen_window = 0;

  friend bool operator==(const HpoResult&, const HpoResult&) = default;
};

std::vector<std::size_t> default_window_grid(Task task);

// Highest accuracy wins; ties go to the smaller window.
std::size_t choose_window(const std::vector<std::size_t>& grid,
                          const std::vector<double>& accuracy);

// Trains one ensemble per window (vocabulary rebuilt each time) with the
// seeds in `base`.
HpoResult hpo_context_window(const std::vector<std::size_t>& grid, const Dataset& train,
                             const Dataset& val, Task task, const EnsembleConfig& base);

struct LearningCurvePoint {
  std::size_t n_finetune_docs = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation; 0 for one seed
  std::size_t n_seeds = 0;

  friend bool operator==(const LearningCurvePoint&, const LearningCurvePoint&) = default;
};

// Maps a fine-tuning subset to test accuracy.
using CurveTrainer =
    std::function<double(const Dataset& subset, const Dataset& test, std::uint64_t seed)>;

// Each seed fixes one shuffle of the pool; size n uses its first n documents.
std::vector<LearningCurvePoint> learning_curve(const std::vector<std::size_t>& sizes,
                                               const std::vector<std::uint64_t>& seeds,
                                               const CurveTrainer& trainer, const Dataset& pool,
                                               const Dataset& test);

// Offline stand-in for a fine-tuned model: a BOW network trained from scratch
// on the subset (15% held out for epoch selection), scored on observed test
// labels. Epochs are raised until training performs at least `min_updates`
// gradient steps, so small subsets are trained to convergence too.
struct SimulatedFinetune {
  Task task = Task::kBinary;
  std::size_t window = 800;
  VocabParams vocab;
  TrainConfig train;
  std::size_t min_updates = 3000;

  double operator()(const Dataset& subset, const Dataset& test, std::uint64_t seed) const;
};

std::vector<std::size_t> default_curve_sizes();

struct ReportMeta {
  double chance_level = 0.5;
  std::string chance_note = "1/n_labels, assumes balanced truths";
  std::optional<double> noise_rate;
  std::optional<double> noise_ceiling;

  static ReportMeta for_task(Task task, std::optional<double> noise_rate);
  friend bool operator==(const ReportMeta&, const ReportMeta&) = default;
};

enum class ReportFormat { kJson, kCsv };

ReportFormat parse_report_format(std::string_view name);
// From the file extension; json unless it is ".csv".
ReportFormat report_format_for(const std::filesystem::path& path);

std::string metrics_json(const Metrics& m, const ReportMeta& meta);
std::string curve_json(const std::vector<LearningCurvePoint>& curve, const ReportMeta& meta);
std::string hpo_json(const HpoResult& h, const ReportMeta& meta);

std::string metrics_csv(const Metrics& m);
std::string curve_csv(const std::vector<LearningCurvePoint>& curve);
std::string hpo_csv(const HpoResult& h);

// CSV reports write their metadata to "<path>.meta.json".
void emit_report(const Metrics& m, const ReportMeta& meta, ReportFormat format,
                 const std::filesystem::path& path);
void emit_report(const std::vector<LearningCurvePoint>& curve, const ReportMeta& meta,
                 ReportFormat format, const std::filesystem::path& path);
void emit_report(const HpoResult& h, const ReportMeta& meta, ReportFormat format,
                 const std::filesystem::path& path);

Metrics parse_metrics_json(std::string_view text, ReportMeta* meta = nullptr);
std::vector<LearningCurvePoint> parse_curve_json(std::string_view text,
                                                 ReportMeta* meta = nullptr);
HpoResult parse_hpo_json(std::string_view text, ReportMeta* meta = nullptr);
std::vector<LearningCurvePoint> parse_curve_csv(std::string_view text);

// Writes `content` to `path`, throwing IoError naming the path on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lexsort
