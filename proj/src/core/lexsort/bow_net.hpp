// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Single-hidden-layer ReLU network with a softmax output over sparse
// relative-frequency vectors, trained by mini-batch gradient descent. The
// input is reweighted per feature and L2-normalized before the first layer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lexsort/featurize.hpp"

namespace lexsort {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  double learning_rate = 0.5;
  std::size_t hidden_size = 128;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  std::size_t window = 800;
  // Rescales a batch gradient whose global L2 norm exceeds this; 0 disables.
  double clip_norm = 0.0;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

using TrainHistory = std::vector<EpochStats>;

struct LabeledVector {
  FeatureVector x;
  std::size_t label = 0;
};

struct BowNet {
  Eigen::MatrixXd w1;  // hidden x vocab
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // labels x hidden
  Eigen::VectorXd b2;
  // Fixed, non-negative per-feature weights applied before the input is
  // L2-normalized. Not trained.
  Eigen::VectorXd input_weight;

  std::size_t vocab_size() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t n_labels() const { return static_cast<std::size_t>(w2.rows()); }
  bool all_finite() const;
};

struct BowGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

BowNet bow_init(std::size_t vocab_size, std::size_t hidden_size, std::size_t n_labels,
                std::uint64_t seed);

// All-zero parameters; forward then yields the uniform distribution.
BowNet bow_zero(std::size_t vocab_size, std::size_t hidden_size, std::size_t n_labels);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// ln((1 + n_docs) / (1 + df)) per vocabulary entry.
Eigen::VectorXd idf_weights(const Vocab& vocab, std::size_t n_docs);

Eigen::VectorXd bow_forward(const BowNet& net, const FeatureVector& x);

// Mean cross-entropy plus (l2/2)(|W1|^2 + |W2|^2), with exact gradients.
double bow_loss_and_grad(const BowNet& net, std::span<const LabeledVector> batch, double l2,
                         BowGradients* grad);

double bow_gradient_check(const BowNet& net, std::span<const LabeledVector> batch, double h,
                          double l2 = 0.0);

struct BowTrainResult {
  BowNet net;
  TrainHistory history;
  std::size_t best_epoch = 0;
};

BowTrainResult bow_train(BowNet net, std::span<const LabeledVector> train,
                         std::span<const LabeledVector> val, const TrainConfig& config);

double bow_accuracy(const BowNet& net, std::span<const LabeledVector> data);

// Relative error used by the finite-difference checkers.
double relative_error(double analytic, double numeric);

std::size_t argmax(const Eigen::VectorXd& p);

}  // namespace lexsort
