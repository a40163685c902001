// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lexsort/corpus.hpp"
#include "lexsort/featurize.hpp"
#include "test_util.hpp"

using namespace lexsort;
using lexsort::testing::small_spec;
using lexsort::testing::TempDir;

namespace {

std::string token_text(const std::string& text) {
  const auto seq = tokenize(text);
  return " " + join_tokens(seq.tokens, 0, seq.size()) + " ";
}

bool contains_any_phrase(const Document& d, const std::vector<std::string>& phrases) {
  const auto hay = token_text(d.text);
  for (const auto& p : phrases)
    if (hay.find(token_text(p)) != std::string::npos) return true;
  return false;
}

std::size_t flips(const Dataset& d) {
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](const Document& x) {
    return x.observed_label != x.true_label;
  }));
}

// Largest-remainder split sizes for fractions given in hundredths.
std::array<std::size_t, 3> percent_split(std::size_t n, std::array<std::size_t, 3> pct) {
  std::array<std::size_t, 3> sizes{};
  std::array<std::size_t, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = pct[i] * n / 100;
    rem[i] = pct[i] * n % 100;
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++sizes[order[k]];
  return sizes;
}

}  // namespace

TEST_CASE("labels: names, categories and task indices") {
  CHECK(binary_label_name(BinaryLabel::kOilAndGas) == "Oil and Gas Document");
  CHECK(binary_label_name(BinaryLabel::kOther) == "Other");
  CHECK(subclass_name(Subclass::kRelease) == "Release");
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    const auto l = Label::from_category(c);
    CHECK(l.is_valid());
    CHECK(l.category() == c);
  }
  CHECK(task_index(Label::other(), Task::kMultiClass) == std::nullopt);
  CHECK(task_index(Label::other(), Task::kBinary) == 1u);
  CHECK(task_index(Label::oil_and_gas(Subclass::kTopLease), Task::kMultiClass) == 8u);
  CHECK(task_label_names(Task::kMultiClass).size() == 9);
  CHECK_THROWS_AS(parse_subclass_name("Subordination of Oil and Gas Lease"), TaxonomyError);
  CHECK_FALSE((Label{BinaryLabel::kOther, Subclass::kRelease}).is_valid());
  CHECK_FALSE((Label{BinaryLabel::kOilAndGas, std::nullopt}).is_valid());
}

TEST_CASE("generate: ten documents of a uniform mix carry their signatures") {
  CorpusSpec s;
  s.n_documents = 10;
  s.class_mix.fill(0.1);
  s.seed = 7;
  const auto d = generate_corpus(s);
  REQUIRE(d.size() == 10);
  for (const auto& doc : d)
    CHECK(contains_any_phrase(doc, s.signature_phrases[doc.true_label.category()]));
}

TEST_CASE("generate: count and signature invariant across random specs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    CorpusSpec s;
    s.n_documents = 1 + rng.below(60);
    s.seed = rng.next();
    s.min_tokens = 5 + rng.below(40);
    s.max_tokens = s.min_tokens + rng.below(80);
    s.boilerplate_vocab_size = 20 + rng.below(400);
    double total = 0.0;
    for (auto& p : s.class_mix) total += (p = rng.uniform());
    for (auto& p : s.class_mix) p /= total;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < kCategoryCount; ++i) sum += s.class_mix[i];
    s.class_mix.back() = 1.0 - sum;
    if (rng.bernoulli(0.5)) s.signature_position = SignaturePosition::after_offset(rng.below(50));
    const auto d = generate_corpus(s);
    REQUIRE(d.size() == s.n_documents);
    for (const auto& doc : d) {
      CHECK(doc.true_label.is_valid());
      CHECK(doc.true_label == doc.observed_label);
      CHECK(contains_any_phrase(doc, s.signature_phrases[doc.true_label.category()]));
    }
  }
}

TEST_CASE("generate: deterministic for a seed, different across seeds") {
  const auto a = generate_corpus(small_spec(50, 3));
  const auto b = generate_corpus(small_spec(50, 3));
  const auto c = generate_corpus(small_spec(50, 4));
  CHECK(a.same_documents(b));
  CHECK_FALSE(a.same_documents(c));
}

TEST_CASE("generate: signatures after an offset start at or beyond it") {
  auto s = small_spec(40, 5);
  s.signature_position = SignaturePosition::after_offset(300);
  s.min_tokens = 350;
  s.max_tokens = 400;
  for (const auto& doc : generate_corpus(s)) {
    const auto seq = tokenize(doc.text);
    const auto head = " " + join_tokens(seq.tokens, 0, std::min<std::size_t>(300, seq.size())) + " ";
    for (const auto& p : s.signature_phrases[doc.true_label.category()])
      CHECK(head.find(token_text(p)) == std::string::npos);
    CHECK(contains_any_phrase(doc, s.signature_phrases[doc.true_label.category()]));
  }
}

TEST_CASE("generate: invalid specs are rejected") {
  auto s = small_spec(0, 1);
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
  s = small_spec(10, 1);
  s.class_mix[0] += 0.1;
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
  s = small_spec(10, 1);
  s.min_tokens = 10;
  s.max_tokens = 5;
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
  s = small_spec(10, 1);
  s.noise_rate = 0.5;
  CHECK_THROWS_AS(generate_noisy_corpus(s), ValidationError);
  s = small_spec(10, 1);
  s.signature_phrases[2].clear();
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
}

TEST_CASE("generate: default mix gives a balanced binary task") {
  const auto d = generate_corpus(small_spec(4000, 11));
  const auto other = std::count_if(d.begin(), d.end(), [](const Document& x) {
    return x.true_label.binary == BinaryLabel::kOther;
  });
  const double frac = static_cast<double>(other) / 4000.0;
  CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / 4000.0));
}

TEST_CASE("noise: zero rate is the identity") {
  const auto d = generate_corpus(small_spec(200, 2));
  for (std::uint64_t seed : {1u, 2u, 77u}) CHECK(inject_label_noise(d, 0.0, seed).same_documents(d));
}

TEST_CASE("noise: flip fraction within the binomial band for seeds 1..20") {
  auto s = small_spec(5000, 1);
  s.min_tokens = 5;
  s.max_tokens = 10;
  const auto clean = generate_corpus(s);
  const double rho = 0.05;
  const double band = 3.0 * std::sqrt(rho * (1 - rho) / 5000.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto noisy = inject_label_noise(clean, rho, seed);
    const double f = static_cast<double>(flips(noisy)) / 5000.0;
    CHECK(std::abs(f - rho) <= band);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      CHECK(noisy[i].observed_label.is_valid());
      CHECK(noisy[i].true_label == clean[i].true_label);
      if (noisy[i].observed_label != clean[i].observed_label)
        CHECK(noisy[i].observed_label.binary != clean[i].observed_label.binary);
    }
  }
}

TEST_CASE("noise: flip count matches an independent replay of the draws") {
  const auto clean = generate_corpus(small_spec(5000, 1));
  const auto noisy = inject_label_noise(clean, 0.05, 123);
  // Replays the generator's draws: one uniform per document, plus one subclass
  // draw for each Other -> Oil and Gas flip.
  Rng rng(123);
  std::size_t expected = 0;
  for (const auto& doc : clean) {
    if (rng.uniform() < 0.05) {
      ++expected;
      if (doc.observed_label.binary == BinaryLabel::kOther) rng.below(kSubclassCount);
    }
  }
  CHECK(flips(noisy) == expected);
  CHECK(expected > 200);
  CHECK(expected < 300);
}

TEST_CASE("noise: generated corpus at 0.05 has a flip fraction of 0.05 +- 0.01") {
  auto s = small_spec(5000, 1, 0.05);
  s.min_tokens = 5;
  s.max_tokens = 10;
  const auto d = generate_noisy_corpus(s);
  CHECK(std::abs(static_cast<double>(flips(d)) / 5000.0 - 0.05) <= 0.01);
}

TEST_CASE("noise: O&G flipped to Other drops the subclass; subclass level keeps binary") {
  const auto clean = generate_corpus(small_spec(500, 4));
  const auto noisy = inject_label_noise(clean, 0.3, 9);
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (clean[i].observed_label.binary == BinaryLabel::kOilAndGas &&
        noisy[i].observed_label.binary == BinaryLabel::kOther)
      CHECK_FALSE(noisy[i].observed_label.subclass.has_value());
  const auto sub = inject_label_noise(clean, 0.3, 9, NoiseLevel::kSubclass);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CHECK(sub[i].observed_label.binary == clean[i].observed_label.binary);
    if (sub[i].observed_label != clean[i].observed_label) {
      ++changed;
      CHECK(sub[i].observed_label.subclass != clean[i].observed_label.subclass);
    }
  }
  CHECK(changed > 0);
}

TEST_CASE("noise ceiling") {
  CHECK(noise_ceiling(0.04) == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(noise_ceiling(0.0) == 1.0);
  CHECK(noise_ceiling(0.05) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK_THROWS_AS(noise_ceiling(-0.1), ValidationError);
}

TEST_CASE("split: largest-remainder sizes") {
  CHECK(split_sizes(10, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(split_sizes(5000, {0.76, 0.12, 0.12})[2] == 600);
  for (std::size_t n : {7u, 10u, 33u, 101u, 999u, 5000u, 12345u})
    for (auto pct : {std::array<std::size_t, 3>{76, 12, 12}, {70, 15, 15}, {34, 33, 33},
                     {80, 10, 10}, {50, 25, 25}, {1, 1, 98}})
      CHECK(split_sizes(n, {pct[0] / 100.0, pct[1] / 100.0, pct[2] / 100.0}) ==
            percent_split(n, pct));
  CHECK_THROWS_AS(split_sizes(10, {0.5, 0.5, 0.1}), ValidationError);
  CHECK_THROWS_AS(split_sizes(10, {1.0, 0.0, 0.0}), ValidationError);
}

TEST_CASE("split: partitions for random fractions and seeds; deterministic") {
  const auto d = generate_corpus(small_spec(120, 8));
  std::set<std::string> all;
  for (const auto& doc : d) all.insert(doc.id);
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = 0.1 + 0.8 * rng.uniform();
    const double b = (1.0 - a) * (0.1 + 0.8 * rng.uniform());
    const SplitFractions f{a, b, 1.0 - a - b};
    const auto seed = rng.next();
    const auto s = split(d, f, seed);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const Dataset* part : {&s.train, &s.val, &s.test})
      for (const auto& doc : *part) {
        seen.insert(doc.id);
        ++total;
      }
    CHECK(total == d.size());
    CHECK(seen == all);
    const auto again = split(d, f, seed);
    CHECK(again.train.same_documents(s.train));
    CHECK(again.test.same_documents(s.test));
  }
}

TEST_CASE("jsonl: round trip is the identity on random datasets") {
  TempDir tmp;
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = small_spec(1 + rng.below(30), rng.next(), 0.2 * rng.uniform());
    s.min_tokens = 3;
    s.max_tokens = 40;
    const auto d = generate_noisy_corpus(s);
    const auto path = tmp / ("d" + std::to_string(trial) + ".jsonl");
    save_jsonl(d, path);
    CHECK(load_jsonl(path).same_documents(d));
  }
}

TEST_CASE("jsonl: taxonomy, empty and malformed input") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_jsonl(in, "mem");
  };
  const std::string good =
      R"({"id":"a","text":"oil and gas lease","state":"TX","county":"Reeves County",)"
      R"("label_binary":"Oil and Gas Document","label_subclass":"Oil and Gas Lease"})";
  CHECK(parse(good).size() == 1);
  CHECK(parse(good)[0].true_label == parse(good)[0].observed_label);
  std::string bad = good;
  bad.replace(bad.find("Oil and Gas Lease\"}"), 17, "Subordination of Oil and Gas Lease");
  CHECK_THROWS_AS(parse(bad), TaxonomyError);
  CHECK_THROWS_AS(parse(""), ValidationError);
  CHECK_THROWS_AS(parse("\n\n"), ValidationError);
  CHECK_THROWS_AS(parse("{not json"), ValidationError);
  CHECK_THROWS_AS(parse(good + "\n" + good), ValidationError);  // duplicate id
  CHECK_THROWS_AS(load_jsonl("/nonexistent/lexsort.jsonl"), IoError);
}

TEST_CASE("task filter keeps observed Oil and Gas documents for multiclass") {
  const auto d = generate_noisy_corpus(small_spec(300, 12, 0.1));
  CHECK(filter_for_task(d, Task::kBinary).size() == d.size());
  const auto mc = filter_for_task(d, Task::kMultiClass);
  for (const auto& doc : mc) CHECK(doc.observed_label.binary == BinaryLabel::kOilAndGas);
  const auto idx = observed_task_indices(mc, Task::kMultiClass);
  CHECK(idx.size() == mc.size());
  CHECK_THROWS_AS(observed_task_indices(d, Task::kMultiClass), ValidationError);
}
