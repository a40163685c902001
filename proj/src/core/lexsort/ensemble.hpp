// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Linear opinion pool over the BOW and attention-CNN branches, end-to-end
// training, prediction and the LXS1 bundle container.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lexsort/attn_cnn.hpp"
#include "lexsort/bow_net.hpp"
#include "lexsort/corpus.hpp"
#include "lexsort/featurize.hpp"

namespace lexsort {

inline constexpr std::uint32_t kBundleFormatVersion = 1;

struct EnsembleConfig {
  Task task = Task::kBinary;
  std::size_t window = 800;
  VocabParams vocab;
  // Unigram vocabulary cap for the CNN embedding table.
  std::size_t cnn_vocab_max = 20000;
  TrainConfig bow;
  TrainConfig cnn{.learning_rate = 1.0, .clip_norm = 1.0};
  CnnShape cnn_shape;
  // Fixed combination weight; tuned on validation data when absent.
  std::optional<double> alpha;

  static EnsembleConfig defaults(Task task);
  void validate() const;
};

struct ModelBundle {
  Task task = Task::kBinary;
  std::size_t window = 800;
  double alpha = 0.5;
  Vocab vocab;
  Vocab cnn_vocab;  // unigrams; CNN token id = index + 1
  BowNet bow;
  AttnCnn cnn;
  std::uint32_t format_version = kBundleFormatVersion;

  std::size_t n_labels() const { return task_label_count(task); }
  void validate() const;
};

struct PredictionResult {
  std::size_t label = 0;  // index into task_label_names(task)
  Eigen::VectorXd probabilities;
  Eigen::VectorXd bow_probabilities;
  Eigen::VectorXd cnn_probabilities;
};

Eigen::VectorXd combine(const Eigen::VectorXd& p_bow, const Eigen::VectorXd& p_cnn,
                        double alpha);

PredictionResult predict(const ModelBundle& bundle, std::string_view text);
// Tokens are truncated to the bundle window before use.
PredictionResult predict_tokens(const ModelBundle& bundle, const TokenSequence& seq);

struct EnsembleTrainResult {
  ModelBundle bundle;
  TrainHistory bow_history;
  TrainHistory cnn_history;
  // Validation accuracy for alpha = 0, 0.1, ..., 1.
  std::vector<double> alpha_accuracy;
  double val_accuracy = 0.0;
};

// Trains both branches on `train` (observed labels) and tunes alpha on `val`
// unless config.alpha is set. MultiClass keeps observed Oil and Gas documents.
EnsembleTrainResult train_ensemble(const Dataset& train, const Dataset& val,
                                   const EnsembleConfig& config);

// Chooses the alpha with the highest accuracy; ties go to the larger alpha.
double tune_alpha(const std::vector<Eigen::VectorXd>& p_bow,
                  const std::vector<Eigen::VectorXd>& p_cnn,
                  const std::vector<std::size_t>& labels, std::vector<double>* accuracy);

// Accuracy of the bundle against observed labels of the task's documents.
double bundle_accuracy(const ModelBundle& bundle, const Dataset& data);

void write_bundle(const ModelBundle& bundle, std::ostream& out);
ModelBundle read_bundle(std::istream& in);
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace lexsort
