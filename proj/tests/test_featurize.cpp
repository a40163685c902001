// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>
#include <set>

#include "lexsort/corpus.hpp"
#include "lexsort/featurize.hpp"
#include "test_util.hpp"

using namespace lexsort;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

TokenSequence seq_of(std::vector<std::string> tokens) {
  TokenSequence s;
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    s.offsets.push_back({pos, pos + t.size()});
    pos += t.size() + 1;
  }
  s.tokens = std::move(tokens);
  return s;
}

// Random text over a small alphabet with assorted separators.
std::string random_text(Rng& rng, std::size_t max_words) {
  static const std::vector<std::string> words = {"oil", "gas", "lease", "a", "b", "of", "the",
                                                 "Tract", "NW", "1st", "Ex", "x7"};
  static const std::vector<std::string> seps = {" ", "  ", ", ", ". ", "\n", "-", "; ", "'"};
  std::string out;
  const auto n = rng.below(max_words + 1);
  for (std::size_t i = 0; i < n; ++i) {
    out += words[rng.below(words.size())];
    out += seps[rng.below(seps.size())];
  }
  return out;
}

// Brute-force n-gram counts by explicit windows.
std::map<std::string, std::size_t> brute_ngrams(const std::vector<std::string>& t,
                                                std::size_t lo, std::size_t hi) {
  std::map<std::string, std::size_t> out;
  for (std::size_t start = 0; start < t.size(); ++start)
    for (std::size_t n = lo; n <= hi && start + n <= t.size(); ++n) {
      std::string g = t[start];
      for (std::size_t k = 1; k < n; ++k) g += " " + t[start + k];
      ++out[g];
    }
  return out;
}

}  // namespace

TEST_CASE("tokenize: rule examples") {
  CHECK(tokenize("Oil and Gas Lease").tokens == toks({"oil", "and", "gas", "lease"}));
  CHECK(tokenize("Lessee's term: 5 years.").tokens == toks({"lessee", "s", "term", "5", "years"}));
  CHECK(tokenize("").tokens.empty());
  CHECK(tokenize("  ,.;  ").tokens.empty());
  CHECK(tokenize("Sec. 12\xE2\x80\x94NW/4").tokens == toks({"sec", "12", "nw", "4"}));
  CHECK(tokenize("\xC3\x89TAT civil").tokens == toks({"\xC3\xA9tat", "civil"}));
}

TEST_CASE("tokenize: offsets point at the source text") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto text = random_text(rng, 30);
    const auto s = tokenize(text);
    REQUIRE(s.offsets.size() == s.tokens.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto piece = text.substr(s.offsets[k].start, s.offsets[k].end - s.offsets[k].start);
      CHECK(tokenize(piece).tokens == std::vector<std::string>{s.tokens[k]});
      if (k > 0) CHECK(s.offsets[k].start >= s.offsets[k - 1].end);
    }
  }
}

TEST_CASE("truncate: prefix, identity, idempotence") {
  std::vector<std::string> t;
  for (int i = 0; i < 1000; ++i) t.push_back("w" + std::to_string(i));
  const auto s = seq_of(t);
  const auto cut = truncate(s, 800);
  CHECK(cut.size() == 800);
  CHECK(cut.tokens.back() == "w799");
  CHECK(truncate(cut, 800) == cut);
  const auto small = seq_of(std::vector<std::string>(t.begin(), t.begin() + 100));
  CHECK(truncate(small, 1500) == small);
  CHECK(truncate(s, 1).tokens == toks({"w0"}));
  CHECK_THROWS_AS(truncate(s, 0), ValidationError);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto x = tokenize(random_text(rng, 40));
    const std::size_t w = 1 + rng.below(50);
    CHECK(truncate(truncate(x, w), w) == truncate(x, w));
  }
}

TEST_CASE("extract_ngrams: examples") {
  const auto c = extract_ngrams(seq_of(toks({"a", "b", "a"})), 1, 2);
  CHECK(c == NgramCounts{{"a", 2}, {"b", 1}, {"a b", 1}, {"b a", 1}});
  CHECK(extract_ngrams(seq_of(toks({"a"})), 2, 2).empty());
  CHECK_THROWS_AS(extract_ngrams(seq_of(toks({"a"})), 0, 2), ValidationError);
  CHECK_THROWS_AS(extract_ngrams(seq_of(toks({"a"})), 3, 2), ValidationError);
  std::vector<std::string> fifty;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) fifty.push_back(std::to_string(rng.below(7)));
  std::size_t total = 0;
  for (const auto& [g, n] : extract_ngrams(seq_of(fifty), 1, 3)) total += n;
  CHECK(total == 147);
}

TEST_CASE("extract_ngrams: equals brute-force sliding windows on 100 random strings") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const auto s = tokenize(random_text(rng, 40));
    const std::size_t lo = 1 + rng.below(3);
    const std::size_t hi = lo + rng.below(3);
    const auto got = extract_ngrams(s, lo, hi);
    CHECK(NgramCounts(got.begin(), got.end()) == brute_ngrams(s.tokens, lo, hi));
    std::size_t total = 0;
    for (const auto& [g, n] : got) total += n;
    std::size_t expect = 0;
    for (std::size_t n = lo; n <= hi; ++n) expect += s.size() >= n ? s.size() - n + 1 : 0;
    CHECK(total == expect);
  }
}

TEST_CASE("unigram multiset and unigram features are order independent") {
  Rng rng(21);
  for (int i = 0; i < 30; ++i) {
    auto t = tokenize(random_text(rng, 30)).tokens;
    auto p = t;
    rng.shuffle(p);
    CHECK(extract_ngrams(seq_of(t), 1, 1) == extract_ngrams(seq_of(p), 1, 1));
    if (t.empty()) continue;
    const Vocab v = build_vocab(std::vector<TokenSequence>{seq_of(t)}, VocabParams{1, 1, 1, 1000});
    CHECK(vectorize(seq_of(t), v, 1000) == vectorize(seq_of(p), v, 1000));
  }
}

TEST_CASE("build_vocab: document frequency thresholds") {
  const std::vector<TokenSequence> docs = {seq_of(toks({"oil", "x"})), seq_of(toks({"oil", "y"})),
                                           seq_of(toks({"oil", "oil", "z"}))};
  const auto v = build_vocab(docs, VocabParams{1, 1, 3, 100});
  CHECK(v.size() == 1);
  CHECK(v.find("oil") == 0);
  CHECK(v.doc_frequency(0) == 3);
  const auto v2 = build_vocab(docs, VocabParams{1, 2, 2, 100});
  CHECK(v2.find("x") == -1);
  CHECK(v2.find("oil") >= 0);
  CHECK_THROWS_AS(build_vocab(docs, VocabParams{1, 1, 4, 100}), ConfigurationError);
}

TEST_CASE("build_vocab: matches a counting oracle on a 1000-document corpus") {
  auto spec = lexsort::testing::small_spec(1000, 31);
  const auto data = generate_corpus(spec);
  std::vector<TokenSequence> docs;
  for (const auto& d : data) docs.push_back(truncate(tokenize(d.text), 800));

  std::map<std::string, std::set<std::size_t>> where;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (const auto& [g, n] : brute_ngrams(docs[i].tokens, 1, 3)) where[g].insert(i);
  std::vector<std::pair<std::size_t, std::string>> qualifying;
  for (const auto& [g, ids] : where)
    if (ids.size() >= 2) qualifying.emplace_back(ids.size(), g);
  std::sort(qualifying.begin(), qualifying.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  for (std::size_t cap : {std::size_t{20000}, std::size_t{500}}) {
    const auto v = build_vocab(data, 800, VocabParams{1, 3, 2, cap});
    REQUIRE(v.size() == std::min(cap, qualifying.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(v.term(i) == qualifying[i].second);
      CHECK(v.doc_frequency(i) == qualifying[i].first);
    }
  }
}

TEST_CASE("build_vocab: invariant to document order") {
  const auto data = generate_corpus(lexsort::testing::small_spec(200, 32));
  std::vector<TokenSequence> docs;
  for (const auto& d : data) docs.push_back(tokenize(d.text));
  const auto a = build_vocab(docs, VocabParams{});
  Rng rng(1);
  rng.shuffle(docs);
  CHECK(build_vocab(docs, VocabParams{}) == a);
}

TEST_CASE("vectorize: formula, empty input and naive recount") {
  const std::vector<TokenSequence> vdocs = {seq_of(toks({"oil"}))};
  const auto v = build_vocab(vdocs, VocabParams{1, 1, 1, 10});
  const auto fv = vectorize(seq_of(toks({"oil", "zzz", "oil"})), v, 800);
  REQUIRE(fv.nnz() == 1);
  CHECK(fv.indices[0] == 0);
  CHECK(fv.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(vectorize(seq_of({}), v, 800).nnz() == 0);

  const auto data = generate_corpus(lexsort::testing::small_spec(200, 33));
  const auto vocab = build_vocab(data, 40, VocabParams{});
  for (const auto& d : data) {
    const auto s = tokenize(d.text);
    const auto x = vectorize(s, vocab, 40);
    const auto cut = truncate(s, 40);
    const auto counts = brute_ngrams(cut.tokens, 1, 3);
    std::size_t total = 0, in_vocab = 0;
    std::map<std::size_t, double> expect;
    for (const auto& [g, n] : counts) {
      total += n;
      const auto idx = vocab.find(g);
      if (idx >= 0) {
        in_vocab += n;
        expect[static_cast<std::size_t>(idx)] = static_cast<double>(n);
      }
    }
    REQUIRE(x.nnz() == expect.size());
    double sum = 0.0;
    std::size_t k = 0;
    for (const auto& [idx, n] : expect) {
      CHECK(x.indices[k] == idx);
      CHECK(x.values[k] == doctest::Approx(n / static_cast<double>(total)).epsilon(1e-15));
      sum += x.values[k];
      ++k;
    }
    CHECK(sum == doctest::Approx(static_cast<double>(in_vocab) / static_cast<double>(total)));
    CHECK(sum <= 1.0 + 1e-12);
  }
}
