// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/attn_cnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lexsort {
namespace {

using Index = Eigen::Index;

struct Pass {
  std::vector<std::uint32_t> padded;  // ids after padding to kernel width
  std::size_t n_valid = 0;            // unmasked convolution positions (a prefix)
  Eigen::MatrixXd cols;               // n_valid x (k * d) unfolded windows
  Eigen::MatrixXd pre;                // n_valid x n_filters
  Eigen::MatrixXd act;                // relu(pre)
  Eigen::VectorXd attn;               // n_valid
  Eigen::VectorXd pooled;             // n_filters
  Eigen::VectorXd logits;
};

void check_ids(const AttnCnn& m, std::span<const std::uint32_t> ids) {
  for (auto id : ids)
    if (id >= m.n_tokens())
      throw ValidationError("token id " + std::to_string(id) + " out of range");
}

Pass run(const AttnCnn& m, std::span<const std::uint32_t> ids) {
  const std::size_t k = m.kernel_width;
  const auto d = static_cast<Index>(m.embed_dim());
  Pass p;
  p.padded.assign(ids.begin(), ids.end());
  if (p.padded.size() < k) p.padded.resize(k, 0);
  p.n_valid = ids.size() >= k ? ids.size() - k + 1 : 1;
  const auto n = static_cast<Index>(p.n_valid);
  p.cols.resize(n, static_cast<Index>(k) * d);
  for (Index t = 0; t < n; ++t)
    for (std::size_t j = 0; j < k; ++j)
      p.cols.row(t).segment(static_cast<Index>(j) * d, d) =
          m.embedding.row(p.padded[static_cast<std::size_t>(t) + j]);
  p.pre.noalias() = p.cols * m.filters.transpose();
  p.act = p.pre.cwiseMax(0.0);
  p.attn = softmax(p.act * m.attention);
  p.pooled.noalias() = p.act.transpose() * p.attn;
  p.logits = m.out_w * p.pooled + m.out_b;
  return p;
}

double log_sum_exp(const Eigen::VectorXd& z) {
  const double mx = z.maxCoeff();
  return mx + std::log((z.array() - mx).exp().sum());
}

// Adds the scaled data-term gradient of one example. Embedding rows that
// receive gradient are appended to `touched` when provided.
double accumulate_example(const AttnCnn& m, const CnnExample& ex, double scale,
                          CnnGradients& g, std::vector<std::uint32_t>* touched) {
  const Pass p = run(m, ex.ids);
  const double lse = log_sum_exp(p.logits);
  const double loss = lse - p.logits[static_cast<Index>(ex.label)];
  Eigen::VectorXd dz = (p.logits.array() - lse).exp().matrix();
  dz[static_cast<Index>(ex.label)] -= 1.0;
  dz *= scale;

  g.out_w.noalias() += dz * p.pooled.transpose();
  g.out_b += dz;
  const Eigen::VectorXd dpooled = m.out_w.transpose() * dz;
  const Eigen::VectorXd dattn = p.act * dpooled;
  const double mean = p.attn.dot(dattn);
  const Eigen::VectorXd ds = p.attn.array() * (dattn.array() - mean);
  g.attention.noalias() += p.act.transpose() * ds;
  Eigen::MatrixXd dact = p.attn * dpooled.transpose();
  dact.noalias() += ds * m.attention.transpose();
  const Eigen::MatrixXd dpre = (p.pre.array() > 0.0).select(dact, 0.0);
  g.filters.noalias() += dpre.transpose() * p.cols;
  const Eigen::MatrixXd dcols = dpre * m.filters;

  const std::size_t k = m.kernel_width;
  const auto d = static_cast<Index>(m.embed_dim());
  for (Index t = 0; t < dcols.rows(); ++t)
    for (std::size_t j = 0; j < k; ++j) {
      const auto id = p.padded[static_cast<std::size_t>(t) + j];
      g.embedding.row(id) += dcols.row(t).segment(static_cast<Index>(j) * d, d);
      if (touched) touched->push_back(id);
    }
  return loss;
}

CnnGradients zero_gradients(const AttnCnn& m) {
  return {Eigen::MatrixXd::Zero(m.embedding.rows(), m.embedding.cols()),
          Eigen::MatrixXd::Zero(m.filters.rows(), m.filters.cols()),
          Eigen::VectorXd::Zero(m.attention.size()),
          Eigen::MatrixXd::Zero(m.out_w.rows(), m.out_w.cols()),
          Eigen::VectorXd::Zero(m.out_b.size())};
}

double penalty(const AttnCnn& m, double l2) {
  if (l2 == 0.0) return 0.0;
  return 0.5 * l2 *
         (m.embedding.squaredNorm() + m.filters.squaredNorm() + m.attention.squaredNorm() +
          m.out_w.squaredNorm());
}

void fill_uniform(Rng& rng, Eigen::Ref<Eigen::MatrixXd> x, double scale) {
  for (Index c = 0; c < x.cols(); ++c)
    for (Index r = 0; r < x.rows(); ++r) x(r, c) = rng.uniform(-scale, scale);
}

}  // namespace

bool AttnCnn::all_finite() const {
  return embedding.allFinite() && filters.allFinite() && attention.allFinite() &&
         out_w.allFinite() && out_b.allFinite();
}

AttnCnn cnn_zero(std::size_t n_tokens, std::size_t n_labels, const CnnShape& shape) {
  if (n_labels == 0 || shape.embed_dim == 0 || shape.n_filters == 0 ||
      shape.kernel_width == 0)
    throw ValidationError("attention-cnn dimensions must be >= 1");
  const auto rows = static_cast<Index>(n_tokens + 1);
  const auto d = static_cast<Index>(shape.embed_dim);
  const auto f = static_cast<Index>(shape.n_filters);
  const auto k = static_cast<Index>(shape.kernel_width);
  const auto l = static_cast<Index>(n_labels);
  return {Eigen::MatrixXd::Zero(rows, d), Eigen::MatrixXd::Zero(f, k * d),
          Eigen::VectorXd::Zero(f),       Eigen::MatrixXd::Zero(l, f),
          Eigen::VectorXd::Zero(l),       shape.kernel_width};
}

AttnCnn cnn_init(std::size_t n_tokens, std::size_t n_labels, const CnnShape& shape,
                 std::uint64_t seed) {
  AttnCnn m = cnn_zero(n_tokens, n_labels, shape);
  Rng rng(seed);
  const double d = static_cast<double>(shape.embed_dim);
  const double f = static_cast<double>(shape.n_filters);
  // Attention starts at zero, i.e. as mean pooling; it sharpens as the
  // attention vector learns which filters mark informative positions.
  fill_uniform(rng, m.embedding, 0.5);
  fill_uniform(rng, m.filters, 1.0 / std::sqrt(d * static_cast<double>(shape.kernel_width)));
  fill_uniform(rng, m.out_w, 1.0 / std::sqrt(f));
  return m;
}

std::vector<std::uint32_t> token_ids(const TokenSequence& seq, const Vocab& unigrams) {
  std::vector<std::uint32_t> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq.tokens) {
    const auto idx = unigrams.find(t);
    if (idx >= 0) ids.push_back(static_cast<std::uint32_t>(idx + 1));
  }
  return ids;
}

CnnOutput cnn_forward(const AttnCnn& model, std::span<const std::uint32_t> ids,
                      std::size_t window, std::size_t extra_pads) {
  if (window == 0) throw ValidationError("window must be >= 1");
  const auto real = ids.first(std::min(ids.size(), window));
  check_ids(model, real);
  const Pass p = run(model, real);
  const std::size_t padded_len = std::max(real.size(), model.kernel_width) + extra_pads;
  CnnOutput out;
  out.probabilities = softmax(p.logits);
  out.attention = Eigen::VectorXd::Zero(static_cast<Index>(padded_len - model.kernel_width + 1));
  out.attention.head(p.attn.size()) = p.attn;
  return out;
}

double cnn_loss_and_grad(const AttnCnn& model, std::span<const CnnExample> batch, double l2,
                         CnnGradients* grad) {
  if (batch.empty()) throw ValidationError("loss_and_grad requires a non-empty batch");
  CnnGradients g = zero_gradients(model);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& ex : batch) {
    check_ids(model, ex.ids);
    if (ex.label >= model.n_labels()) throw ValidationError("label index out of range");
    loss += accumulate_example(model, ex, scale, g, nullptr);
  }
  loss = loss * scale + penalty(model, l2);
  if (grad) {
    if (l2 != 0.0) {
      g.embedding += l2 * model.embedding;
      g.filters += l2 * model.filters;
      g.attention += l2 * model.attention;
      g.out_w += l2 * model.out_w;
    }
    *grad = std::move(g);
  }
  return loss;
}

double cnn_gradient_check(const AttnCnn& model, std::span<const CnnExample> batch, double h,
                          double l2) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be > 0");
  CnnGradients g;
  cnn_loss_and_grad(model, batch, l2, &g);
  AttnCnn probe = model;
  double worst = 0.0;
  auto check = [&](Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& analytic) {
    for (Index c = 0; c < param.cols(); ++c)
      for (Index r = 0; r < param.rows(); ++r) {
        const double orig = param(r, c);
        param(r, c) = orig + h;
        const double up = cnn_loss_and_grad(probe, batch, l2, nullptr);
        param(r, c) = orig - h;
        const double down = cnn_loss_and_grad(probe, batch, l2, nullptr);
        param(r, c) = orig;
        worst = std::max(worst, relative_error(analytic(r, c), (up - down) / (2.0 * h)));
      }
  };
  check(probe.embedding, g.embedding);
  check(probe.filters, g.filters);
  check(probe.attention, g.attention);
  check(probe.out_w, g.out_w);
  check(probe.out_b, g.out_b);
  return worst;
}

double cnn_accuracy(const AttnCnn& model, std::span<const CnnExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    check_ids(model, ex.ids);
    if (argmax(softmax(run(model, ex.ids).logits)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

CnnTrainResult cnn_train(AttnCnn model, std::span<const CnnExample> train,
                         std::span<const CnnExample> val, const TrainConfig& config) {
  config.validate();
  if (train.empty() || val.empty())
    throw ValidationError("training and validation sets must be non-empty");
  for (auto span : {train, val})
    for (const auto& ex : span) {
      check_ids(model, ex.ids);
      if (ex.label >= model.n_labels()) throw ValidationError("label index out of range");
    }

  Rng rng(config.seed);
  auto order = iota_indices(train.size());
  CnnGradients g = zero_gradients(model);
  std::vector<std::uint32_t> touched;
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.l2;

  CnnTrainResult result{model, {}, 0};
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
      for (std::size_t i = start; i < end; ++i)
        batch_loss += accumulate_example(model, train[order[i]], scale, g, &touched);
      loss_sum += batch_loss * scale + penalty(model, config.l2);
      ++n_batches;

      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      if (config.l2 != 0.0) {
        model.embedding *= decay;
        model.filters *= decay;
        model.attention *= decay;
        model.out_w *= decay;
      }
      double step = lr;
      if (config.clip_norm > 0.0) {
        double sq = g.filters.squaredNorm() + g.attention.squaredNorm() +
                    g.out_w.squaredNorm() + g.out_b.squaredNorm();
        for (auto id : touched) sq += g.embedding.row(id).squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) step *= config.clip_norm / norm;
      }
      for (auto id : touched) {
        model.embedding.row(id) -= step * g.embedding.row(id);
        g.embedding.row(id).setZero();
      }
      model.filters -= step * g.filters;
      model.attention -= step * g.attention;
      model.out_w -= step * g.out_w;
      model.out_b -= step * g.out_b;
      g.filters.setZero();
      g.attention.setZero();
      g.out_w.setZero();
      g.out_b.setZero();
    }
    const double epoch_loss = loss_sum / static_cast<double>(n_batches);
    if (!std::isfinite(epoch_loss) || !model.all_finite())
      throw TrainingError("attention-cnn training diverged at epoch " +
                          std::to_string(epoch + 1));
    const double acc = cnn_accuracy(model, val);
    result.history.push_back({epoch_loss, acc});
    if (acc > best_acc) {
      best_acc = acc;
      result.model = model;
      result.best_epoch = epoch + 1;
    }
  }
  return result;
}

}  // namespace lexsort
