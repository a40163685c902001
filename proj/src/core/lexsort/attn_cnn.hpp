// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Sequence branch of the ensemble: unigram embedding, valid-mode 1-D
// convolution with ReLU, dot-product attention pooling and a softmax layer.
//
// Token id 0 is the pad id; out-of-vocabulary tokens are dropped. Sequences shorter than the kernel
// are padded with it. Convolution positions whose window reaches past the
// real tokens are masked out of the attention softmax; when no position is
// fully real (short input) only position 0 is kept. Appending any number of
// pads therefore never changes the output.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lexsort/bow_net.hpp"
#include "lexsort/featurize.hpp"

namespace lexsort {

struct CnnShape {
  std::size_t embed_dim = 32;
  std::size_t n_filters = 64;
  std::size_t kernel_width = 3;
};

struct AttnCnn {
  Eigen::MatrixXd embedding;  // (tokens + 1) x embed_dim; row 0 = pad
  Eigen::MatrixXd filters;    // n_filters x (kernel_width * embed_dim)
  Eigen::VectorXd attention;  // n_filters
  Eigen::MatrixXd out_w;      // labels x n_filters
  Eigen::VectorXd out_b;
  std::size_t kernel_width = 3;

  std::size_t n_tokens() const { return static_cast<std::size_t>(embedding.rows()); }
  std::size_t embed_dim() const { return static_cast<std::size_t>(embedding.cols()); }
  std::size_t n_filters() const { return static_cast<std::size_t>(filters.rows()); }
  std::size_t n_labels() const { return static_cast<std::size_t>(out_w.rows()); }
  bool all_finite() const;
};

struct CnnGradients {
  Eigen::MatrixXd embedding;
  Eigen::MatrixXd filters;
  Eigen::VectorXd attention;
  Eigen::MatrixXd out_w;
  Eigen::VectorXd out_b;
};

struct CnnExample {
  std::vector<std::uint32_t> ids;
  std::size_t label = 0;
};

struct CnnOutput {
  Eigen::VectorXd probabilities;
  // One weight per convolution position of the padded input; masked
  // positions carry 0.
  Eigen::VectorXd attention;
};

// `n_tokens` counts real vocabulary entries; the pad row is added.
AttnCnn cnn_init(std::size_t n_tokens, std::size_t n_labels, const CnnShape& shape,
                 std::uint64_t seed);
AttnCnn cnn_zero(std::size_t n_tokens, std::size_t n_labels, const CnnShape& shape);

// Maps tokens through a unigram vocabulary: id = index + 1. Unknown tokens
// are skipped.
std::vector<std::uint32_t> token_ids(const TokenSequence& seq, const Vocab& unigrams);

// Truncates ids to `window`, then appends `extra_pads` pad ids.
CnnOutput cnn_forward(const AttnCnn& model, std::span<const std::uint32_t> ids,
                      std::size_t window, std::size_t extra_pads = 0);

double cnn_loss_and_grad(const AttnCnn& model, std::span<const CnnExample> batch, double l2,
                         CnnGradients* grad);

double cnn_gradient_check(const AttnCnn& model, std::span<const CnnExample> batch, double h,
                          double l2 = 0.0);

double cnn_accuracy(const AttnCnn& model, std::span<const CnnExample> data);

struct CnnTrainResult {
  AttnCnn model;
  TrainHistory history;
  std::size_t best_epoch = 0;
};

// Examples must already be truncated to the context window.
CnnTrainResult cnn_train(AttnCnn model, std::span<const CnnExample> train,
                         std::span<const CnnExample> val, const TrainConfig& config);

}  // namespace lexsort
