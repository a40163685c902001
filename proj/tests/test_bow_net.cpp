// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lexsort/bow_net.hpp"

using namespace lexsort;

namespace {

BowNet random_net(Rng& rng, std::size_t v, std::size_t h, std::size_t l) {
  BowNet net = bow_zero(v, h, l);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  };
  fill(net.w1);
  fill(net.b1);
  fill(net.w2);
  fill(net.b2);
  for (Eigen::Index i = 0; i < net.input_weight.size(); ++i)
    net.input_weight[i] = rng.uniform(0.2, 2.0);
  return net;
}

FeatureVector random_features(Rng& rng, std::size_t v) {
  FeatureVector x;
  for (std::uint32_t i = 0; i < v; ++i)
    if (rng.bernoulli(0.6)) {
      x.indices.push_back(i);
      x.values.push_back(rng.uniform(0.05, 1.0));
    }
  if (x.indices.empty()) {
    x.indices.push_back(0);
    x.values.push_back(0.5);
  }
  return x;
}

Eigen::VectorXd dense(const FeatureVector& x, std::size_t v) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v));
  for (std::size_t k = 0; k < x.indices.size(); ++k) d[x.indices[k]] = x.values[k];
  return d;
}

// Dense reimplementation of the forward pass.
Eigen::VectorXd dense_forward(const BowNet& n, const FeatureVector& x) {
  Eigen::VectorXd u = dense(x, n.vocab_size()).cwiseProduct(n.input_weight);
  if (u.norm() > 0) u /= u.norm();
  Eigen::VectorXd h = (n.w1 * u + n.b1).cwiseMax(0.0);
  Eigen::VectorXd z = n.w2 * h + n.b2;
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

double oracle_loss(const BowNet& n, const std::vector<LabeledVector>& batch, double l2) {
  double s = 0.0;
  for (const auto& ex : batch) s -= std::log(dense_forward(n, ex.x)[ex.label]);
  return s / static_cast<double>(batch.size()) +
         0.5 * l2 * (n.w1.squaredNorm() + n.w2.squaredNorm());
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Max relative error of analytic gradients against central differences of
// the dense oracle loss.
double fd_error(const BowNet& net, const std::vector<LabeledVector>& batch, double l2, double h) {
  BowGradients g;
  bow_loss_and_grad(net, batch, l2, &g);
  BowNet p = net;
  double worst = 0.0;
  auto sweep = [&](auto& param, const auto& analytic) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double keep = param.data()[i];
      param.data()[i] = keep + h;
      const double up = oracle_loss(p, batch, l2);
      param.data()[i] = keep - h;
      const double down = oracle_loss(p, batch, l2);
      param.data()[i] = keep;
      worst = std::max(worst, rel_err(analytic.data()[i], (up - down) / (2 * h)));
    }
  };
  sweep(p.w1, g.w1);
  sweep(p.b1, g.b1);
  sweep(p.w2, g.w2);
  sweep(p.b2, g.b2);
  return worst;
}

// Two classes with disjoint feature sets.
std::vector<LabeledVector> separable(Rng& rng, std::size_t n) {
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledVector ex;
    ex.label = i % 2;
    for (std::uint32_t f = 0; f < 5; ++f)
      if (rng.bernoulli(0.5) || f == 0) {
        ex.x.indices.push_back(static_cast<std::uint32_t>(f + 5 * ex.label));
        ex.x.values.push_back(rng.uniform(0.1, 1.0));
      }
    out.push_back(ex);
  }
  return out;
}

}  // namespace

TEST_CASE("init: deterministic, zero biases, shapes") {
  const auto a = bow_init(50, 8, 2, 7);
  const auto b = bow_init(50, 8, 2, 7);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b1.isZero(0));
  CHECK(a.b2.isZero(0));
  CHECK_FALSE(a.w1 == bow_init(50, 8, 2, 8).w1);
  const auto big = bow_init(50000, 128, 2, 1);
  CHECK(big.w1.rows() == 128);
  CHECK(big.w1.cols() == 50000);
  CHECK(big.input_weight.size() == 50000);
  CHECK_THROWS_AS(bow_init(0, 8, 2, 1), ValidationError);
}

TEST_CASE("forward: zero net is uniform; equal logits split evenly") {
  Rng rng(1);
  for (std::size_t labels : {2u, 9u}) {
    const auto net = bow_zero(12, 4, labels);
    const auto p = bow_forward(net, random_features(rng, 12));
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(1.0 / labels));
  }
  auto net = bow_zero(3, 2, 2);
  net.b2 << 0.7, 0.7;
  const auto p = bow_forward(net, random_features(rng, 3));
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
}

TEST_CASE("forward: matches a dense reimplementation") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto net = random_net(rng, 6, 4, 3);
    const auto x = random_features(rng, 6);
    CHECK((bow_forward(net, x) - dense_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward: a distribution, shift invariant, empty input allowed") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto net = random_net(rng, 8, 5, 4);
    net.w2 *= 20.0;
    const auto x = random_features(rng, 8);
    const auto p = bow_forward(net, x);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.minCoeff() > 0.0);
    auto shifted = net;
    shifted.b2.array() += rng.uniform(-50, 50);
    CHECK((bow_forward(shifted, x) - p).cwiseAbs().maxCoeff() < 1e-9);
  }
  const auto net = random_net(rng, 4, 3, 2);
  CHECK(std::abs(bow_forward(net, FeatureVector{}).sum() - 1.0) < 1e-12);
  FeatureVector bad;
  bad.indices = {9};
  bad.values = {1.0};
  CHECK_THROWS_AS(bow_forward(net, bad), ValidationError);
}

TEST_CASE("forward: hidden-unit permutation symmetry") {
  Rng rng(4);
  // Dyadic weights and a unit input keep every sum exact.
  BowNet net = bow_zero(1, 6, 3);
  for (Eigen::Index i = 0; i < net.w1.size(); ++i) net.w1.data()[i] = (rng.below(17) - 8.0) / 8;
  for (Eigen::Index i = 0; i < net.w2.size(); ++i) net.w2.data()[i] = (rng.below(17) - 8.0) / 8;
  for (Eigen::Index i = 0; i < net.b1.size(); ++i) net.b1[i] = (rng.below(9) - 4.0) / 4;
  FeatureVector one;
  one.indices = {0};
  one.values = {1.0};
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(perm);
    BowNet q = net;
    for (int i = 0; i < 6; ++i) {
      q.w1.row(i) = net.w1.row(perm[i]);
      q.b1[i] = net.b1[perm[i]];
      q.w2.col(i) = net.w2.col(perm[i]);
    }
    CHECK(bow_forward(q, one) == bow_forward(net, one));
  }
  for (int t = 0; t < 20; ++t) {
    const auto r = random_net(rng, 7, 5, 3);
    BowNet q = r;
    std::vector<int> p5(5);
    std::iota(p5.begin(), p5.end(), 0);
    rng.shuffle(p5);
    for (int i = 0; i < 5; ++i) {
      q.w1.row(i) = r.w1.row(p5[i]);
      q.b1[i] = r.b1[p5[i]];
      q.w2.col(i) = r.w2.col(p5[i]);
    }
    const auto x = random_features(rng, 7);
    CHECK((bow_forward(q, x) - bow_forward(r, x)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("loss: perfect prediction and uniform prediction") {
  auto net = bow_zero(3, 2, 2);
  net.b2 << 1000.0, 0.0;
  FeatureVector x;
  x.indices = {1};
  x.values = {1.0};
  const std::vector<LabeledVector> batch = {{x, 0}};
  BowGradients g;
  CHECK(bow_loss_and_grad(net, batch, 0.0, &g) == 0.0);
  // The losing class keeps a probability far below any representable step.
  CHECK(g.w2.cwiseAbs().maxCoeff() < 1e-300);
  CHECK(g.b2.cwiseAbs().maxCoeff() < 1e-300);
  const auto uni = bow_zero(3, 2, 2);
  CHECK(bow_loss_and_grad(uni, batch, 0.0, nullptr) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(bow_loss_and_grad(uni, std::vector<LabeledVector>{}, 0.0, nullptr),
                  ValidationError);
  CHECK_THROWS_AS(bow_loss_and_grad(uni, std::vector<LabeledVector>{{x, 2}}, 0.0, nullptr),
                  ValidationError);
}

TEST_CASE("loss: agrees with the dense oracle") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto net = random_net(rng, 5, 3, 2);
    std::vector<LabeledVector> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({random_features(rng, 5), rng.below(2)});
    CHECK(bow_loss_and_grad(net, batch, 1e-3, nullptr) ==
          doctest::Approx(oracle_loss(net, batch, 1e-3)).epsilon(1e-12));
  }
}

TEST_CASE("gradients: finite differences of the dense oracle, 20 random draws") {
  Rng rng(6);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto net = random_net(rng, 5, 3, 2 + rng.below(3));
    std::vector<LabeledVector> batch;
    for (int i = 0; i < 4; ++i)
      batch.push_back({random_features(rng, 5), rng.below(static_cast<std::uint64_t>(net.n_labels()))});
    const double l2 = t % 2 ? 1e-2 : 0.0;
    worst = std::max(worst, fd_error(net, batch, l2, 1e-5));
    CHECK(bow_gradient_check(net, batch, 1e-5, l2) < 1e-4);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: zero gradients and invalid step") {
  CHECK(relative_error(0.0, 0.0) == 0.0);
  auto net = bow_zero(3, 2, 2);
  net.b2 << 1000.0, 0.0;
  FeatureVector x;
  x.indices = {0};
  x.values = {1.0};
  const std::vector<LabeledVector> batch = {{x, 0}};
  CHECK(bow_gradient_check(net, batch, 1e-5) < 1e-290);
  CHECK_THROWS_AS(bow_gradient_check(net, batch, 0.0), ValidationError);
}

TEST_CASE("idf weights") {
  const Vocab v(1, 1, 1, {{"a", 10}, {"b", 1}, {"c", 99}});
  const auto w = idf_weights(v, 99);
  CHECK(w[0] == doctest::Approx(std::log(100.0 / 11.0)));
  CHECK(w[1] == doctest::Approx(std::log(50.0)));
  CHECK(w[2] == 0.0);
}

TEST_CASE("train: separable data reaches train accuracy 1") {
  Rng rng(7);
  const auto train = separable(rng, 60);
  const auto val = separable(rng, 20);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.hidden_size = 8;
  const auto r = bow_train(bow_init(10, 8, 2, 3), train, val, cfg);
  CHECK(bow_accuracy(r.net, train) == 1.0);
  CHECK(r.history.size() == 20);
  CHECK(r.best_epoch >= 1);
}

TEST_CASE("train: invalid config and determinism") {
  Rng rng(8);
  const auto train = separable(rng, 30);
  const auto val = separable(rng, 10);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(bow_train(bow_init(10, 4, 2, 1), train, val, cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.epochs = 5;
  cfg.l2 = 1e-3;
  const auto a = bow_train(bow_init(10, 4, 2, 1), train, val, cfg);
  const auto b = bow_train(bow_init(10, 4, 2, 1), train, val, cfg);
  CHECK(a.history == b.history);
  CHECK(a.net.w1 == b.net.w1);
  CHECK(a.net.w2 == b.net.w2);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("train: one full-batch epoch equals one gradient step") {
  Rng rng(9);
  const auto train = separable(rng, 12);
  const auto val = separable(rng, 4);
  auto net = random_net(rng, 10, 4, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 12;
  cfg.learning_rate = 0.3;
  cfg.l2 = 0.05;
  BowGradients g;
  bow_loss_and_grad(net, train, cfg.l2, &g);
  const auto r = bow_train(net, train, val, cfg);
  CHECK((r.net.w1 - (net.w1 - 0.3 * g.w1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.net.w2 - (net.w2 - 0.3 * g.w2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.net.b1 - (net.b1 - 0.3 * g.b1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.net.b2 - (net.b2 - 0.3 * g.b2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.net.input_weight == net.input_weight);
}

TEST_CASE("train: full-batch loss is non-increasing with a small step") {
  Rng rng(10);
  const auto train = separable(rng, 10);
  const auto val = separable(rng, 4);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 10;
  cfg.learning_rate = 0.05;
  const auto r = bow_train(bow_init(10, 6, 2, 4), train, val, cfg);
  for (std::size_t e = 1; e < r.history.size(); ++e)
    CHECK(r.history[e].train_loss <= r.history[e - 1].train_loss);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("train: gradient clipping bounds the step") {
  Rng rng(11);
  const auto train = separable(rng, 8);
  const auto val = separable(rng, 4);
  auto net = random_net(rng, 10, 4, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.learning_rate = 1.0;
  cfg.l2 = 0.0;
  cfg.clip_norm = 1e-3;
  const auto r = bow_train(net, train, val, cfg);
  const double moved = std::sqrt((r.net.w1 - net.w1).squaredNorm() +
                                 (r.net.b1 - net.b1).squaredNorm() +
                                 (r.net.w2 - net.w2).squaredNorm() +
                                 (r.net.b2 - net.b2).squaredNorm());
  CHECK(moved == doctest::Approx(1e-3).epsilon(1e-9));
  cfg.clip_norm = -1.0;
  CHECK_THROWS_AS(bow_train(net, train, val, cfg), ValidationError);
}
