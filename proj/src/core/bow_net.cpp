// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/bow_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lexsort {
namespace {

double input_norm(const BowNet& net, const FeatureVector& x) {
  double sq = 0.0;
  for (std::size_t k = 0; k < x.indices.size(); ++k) {
    const double v = x.values[k] * net.input_weight[x.indices[k]];
    sq += v * v;
  }
  return std::sqrt(sq);
}

void check_indices(const BowNet& net, const FeatureVector& x) {
  if (net.input_weight.size() != net.w1.cols())
    throw ValidationError("bow input weights disagree with the input width");
  for (auto idx : x.indices)
    if (idx >= net.vocab_size())
      throw ValidationError("feature index " + std::to_string(idx) +
                            " out of range for vocabulary of size " +
                            std::to_string(net.vocab_size()));
}

struct Activations {
  Eigen::VectorXd pre;
  Eigen::VectorXd hidden;
  Eigen::VectorXd logits;
};

// The first layer sees u / |u|_2 with u = x * input_weight; `w1_scale`
// multiplies w1 (lazy weight decay during training).
Activations activations(const BowNet& net, const FeatureVector& x, double w1_scale = 1.0) {
  Activations a;
  a.pre = net.b1;
  const double norm = input_norm(net, x);
  if (norm > 0.0) {
    const double s = w1_scale / norm;
    for (std::size_t k = 0; k < x.indices.size(); ++k) {
      const auto c = x.indices[k];
      a.pre.noalias() += (s * x.values[k] * net.input_weight[c]) * net.w1.col(c);
    }
  }
  a.hidden = a.pre.cwiseMax(0.0);
  a.logits = net.w2 * a.hidden + net.b2;
  return a;
}

double log_sum_exp(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

// Accumulates the data term of one example into grad (scaled by `scale`) and
// returns its cross-entropy. W1 columns touched are appended to `touched`
// when provided.
double accumulate_example(const BowNet& net, const LabeledVector& ex, double scale,
                          BowGradients& grad, std::vector<std::uint32_t>* touched,
                          double w1_scale = 1.0) {
  const Activations a = activations(net, ex.x, w1_scale);
  const double lse = log_sum_exp(a.logits);
  const double loss = lse - a.logits[static_cast<Eigen::Index>(ex.label)];
  Eigen::VectorXd dz = (a.logits.array() - lse).exp().matrix();
  dz[static_cast<Eigen::Index>(ex.label)] -= 1.0;
  dz *= scale;
  grad.w2.noalias() += dz * a.hidden.transpose();
  grad.b2 += dz;
  Eigen::VectorXd dpre = net.w2.transpose() * dz;
  for (Eigen::Index h = 0; h < dpre.size(); ++h)
    if (a.pre[h] <= 0.0) dpre[h] = 0.0;
  grad.b1 += dpre;
  const double norm = input_norm(net, ex.x);
  if (norm > 0.0) {
    for (std::size_t k = 0; k < ex.x.indices.size(); ++k) {
      const auto c = ex.x.indices[k];
      grad.w1.col(c).noalias() += (ex.x.values[k] * net.input_weight[c] / norm) * dpre;
      if (touched) touched->push_back(c);
    }
  }
  return loss;
}

BowGradients zero_gradients(const BowNet& net) {
  return {Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols()),
          Eigen::VectorXd::Zero(net.b1.size()),
          Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols()),
          Eigen::VectorXd::Zero(net.b2.size())};
}

double penalty(const BowNet& net, double l2) {
  if (l2 == 0.0) return 0.0;
  return 0.5 * l2 * (net.w1.squaredNorm() + net.w2.squaredNorm());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("epochs must be >= 1");
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (hidden_size == 0) throw ValidationError("hidden_size must be >= 1");
  if (window == 0) throw ValidationError("window must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be > 0");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ValidationError("l2 must be >= 0");
  if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm))
    throw ValidationError("clip_norm must be >= 0");
}

bool BowNet::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         input_weight.allFinite();
}

BowNet bow_init(std::size_t vocab_size, std::size_t hidden_size, std::size_t n_labels,
                std::uint64_t seed) {
  if (vocab_size == 0 || hidden_size == 0 || n_labels == 0)
    throw ValidationError("bow_init: all dimensions must be >= 1");
  BowNet net = bow_zero(vocab_size, hidden_size, n_labels);
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(vocab_size));
  for (Eigen::Index c = 0; c < net.w1.cols(); ++c)
    for (Eigen::Index r = 0; r < net.w1.rows(); ++r) net.w1(r, c) = rng.uniform(-s1, s1);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (Eigen::Index c = 0; c < net.w2.cols(); ++c)
    for (Eigen::Index r = 0; r < net.w2.rows(); ++r) net.w2(r, c) = rng.uniform(-s2, s2);
  return net;
}

BowNet bow_zero(std::size_t vocab_size, std::size_t hidden_size, std::size_t n_labels) {
  if (vocab_size == 0 || hidden_size == 0 || n_labels == 0)
    throw ValidationError("bow network dimensions must be >= 1");
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto h = static_cast<Eigen::Index>(hidden_size);
  const auto l = static_cast<Eigen::Index>(n_labels);
  return {Eigen::MatrixXd::Zero(h, v), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(l, h),
          Eigen::VectorXd::Zero(l), Eigen::VectorXd::Ones(v)};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd idf_weights(const Vocab& vocab, std::size_t n_docs) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < vocab.size(); ++i)
    w[static_cast<Eigen::Index>(i)] =
        std::max(0.0, std::log((1.0 + static_cast<double>(n_docs)) /
                               (1.0 + static_cast<double>(vocab.doc_frequency(i)))));
  return w;
}

Eigen::VectorXd bow_forward(const BowNet& net, const FeatureVector& x) {
  check_indices(net, x);
  return softmax(activations(net, x).logits);
}

double bow_loss_and_grad(const BowNet& net, std::span<const LabeledVector> batch, double l2,
                         BowGradients* grad) {
  if (batch.empty()) throw ValidationError("loss_and_grad requires a non-empty batch");
  BowGradients g = zero_gradients(net);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& ex : batch) {
    check_indices(net, ex.x);
    if (ex.label >= net.n_labels()) throw ValidationError("label index out of range");
    loss += accumulate_example(net, ex, scale, g, nullptr);
  }
  loss = loss * scale + penalty(net, l2);
  if (grad) {
    if (l2 != 0.0) {
      g.w1 += l2 * net.w1;
      g.w2 += l2 * net.w2;
    }
    *grad = std::move(g);
  }
  return loss;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double bow_gradient_check(const BowNet& net, std::span<const LabeledVector> batch, double h,
                          double l2) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be > 0");
  BowGradients g;
  bow_loss_and_grad(net, batch, l2, &g);
  BowNet probe = net;
  double worst = 0.0;
  auto check = [&](Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& analytic) {
    for (Eigen::Index c = 0; c < param.cols(); ++c)
      for (Eigen::Index r = 0; r < param.rows(); ++r) {
        const double orig = param(r, c);
        param(r, c) = orig + h;
        const double up = bow_loss_and_grad(probe, batch, l2, nullptr);
        param(r, c) = orig - h;
        const double down = bow_loss_and_grad(probe, batch, l2, nullptr);
        param(r, c) = orig;
        worst = std::max(worst, relative_error(analytic(r, c), (up - down) / (2.0 * h)));
      }
  };
  check(probe.w1, g.w1);
  check(probe.b1, g.b1);
  check(probe.w2, g.w2);
  check(probe.b2, g.b2);
  return worst;
}

std::size_t argmax(const Eigen::VectorXd& p) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

double bow_accuracy(const BowNet& net, std::span<const LabeledVector> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data)
    if (argmax(bow_forward(net, ex.x)) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

BowTrainResult bow_train(BowNet net, std::span<const LabeledVector> train,
                         std::span<const LabeledVector> val, const TrainConfig& config) {
  config.validate();
  if (train.empty() || val.empty())
    throw ValidationError("training and validation sets must be non-empty");
  for (auto span : {train, val})
    for (const auto& ex : span) {
      check_indices(net, ex.x);
      if (ex.label >= net.n_labels()) throw ValidationError("label index out of range");
    }

  Rng rng(config.seed);
  auto order = iota_indices(train.size());
  BowGradients g = zero_gradients(net);
  std::vector<std::uint32_t> touched;
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.l2;

  // W1 is held as w1_scale * net.w1 so that weight decay stays O(1) per step
  // instead of touching every column; its squared norm is kept incrementally.
  double w1_scale = 1.0;
  double w1_sq = net.w1.squaredNorm();
  auto materialize = [&]() {
    BowNet out = net;
    out.w1 *= w1_scale;
    return out;
  };

  BowTrainResult result{net, {}, 0};
  double best_acc = -1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      touched.clear();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k)
        batch_loss += accumulate_example(net, train[order[k]], scale, g, &touched, w1_scale);
      batch_loss *= scale;
      if (config.l2 != 0.0)
        batch_loss += 0.5 * config.l2 * (w1_scale * w1_scale * w1_sq + net.w2.squaredNorm());
      loss_sum += batch_loss;
      ++n_batches;

      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      if (config.l2 != 0.0) {
        w1_scale *= decay;
        net.w2 *= decay;
      }
      double step_lr = lr;
      if (config.clip_norm > 0.0) {
        double sq = g.b1.squaredNorm() + g.w2.squaredNorm() + g.b2.squaredNorm();
        for (auto c : touched) sq += g.w1.col(c).squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) step_lr *= config.clip_norm / norm;
      }
      const double step = step_lr / w1_scale;
      for (auto c : touched) {
        auto col = net.w1.col(c);
        w1_sq -= col.squaredNorm();
        col -= step * g.w1.col(c);
        w1_sq += col.squaredNorm();
        g.w1.col(c).setZero();
      }
      net.b1 -= step_lr * g.b1;
      net.w2 -= step_lr * g.w2;
      net.b2 -= step_lr * g.b2;
      g.b1.setZero();
      g.w2.setZero();
      g.b2.setZero();
      if (w1_scale < 1e-8) {
        net.w1 *= w1_scale;
        w1_scale = 1.0;
        w1_sq = net.w1.squaredNorm();
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(n_batches);
    BowNet current = materialize();
    if (!std::isfinite(epoch_loss) || !current.all_finite())
      throw TrainingError("bow-net training diverged at epoch " + std::to_string(epoch + 1));
    w1_sq = net.w1.squaredNorm();
    const double acc = bow_accuracy(current, val);
    result.history.push_back({epoch_loss, acc});
    if (acc > best_acc) {
      best_acc = acc;
      result.net = std::move(current);
      result.best_epoch = epoch + 1;
    }
  }
  return result;
}

}  // namespace lexsort
