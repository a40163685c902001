// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <regex>

#include "lexsort/explain.hpp"
#include "test_util.hpp"

using namespace lexsort;

namespace {

// Trained long enough that short documents get sizeable attributions.
// Alpha is pinned so both branches contribute.
const ModelBundle& bundle() {
  static const ModelBundle b = [] {
    const auto data = generate_corpus(lexsort::testing::small_spec(300, 3));
    const auto parts = split(data, SplitFractions{0.7, 0.15, 0.15}, 3);
    auto cfg = EnsembleConfig::defaults(Task::kBinary);
    cfg.window = 60;
    cfg.vocab.max_size = 2000;
    cfg.bow.hidden_size = 16;
    cfg.bow.epochs = 15;
    cfg.cnn.epochs = 10;
    cfg.cnn_shape = CnnShape{8, 8, 3};
    cfg.alpha = 0.5;
    return train_ensemble(parts.train, parts.val, cfg).bundle;
  }();
  return b;
}

// First m tokens of generated documents, re-joined with single spaces.
std::vector<std::string> short_docs(std::size_t m, std::size_t count, std::uint64_t seed) {
  const auto data = generate_corpus(lexsort::testing::small_spec(count, seed));
  std::vector<std::string> out;
  for (const auto& d : data) {
    const auto t = tokenize(d.text).tokens;
    out.push_back(join_tokens(t, 0, m));
  }
  return out;
}

// Brute-force Shapley by averaging marginals over all m! orderings.
std::vector<double> factorial_oracle(std::size_t m, const CoalitionValue& v) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> phi(m, 0.0);
  double count = 0;
  do {
    std::vector<std::size_t> s;
    double prev = v(s);
    for (auto p : perm) {
      s.insert(std::upper_bound(s.begin(), s.end(), p), p);
      const double cur = v(s);
      phi[p] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::string unescape(std::string s) {
  const std::pair<const char*, const char*> ents[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : ents) {
    std::string out;
    std::size_t pos = 0, hit;
    while ((hit = s.find(from, pos)) != std::string::npos) {
      out += s.substr(pos, hit - pos) + to;
      pos = hit + std::strlen(from);
    }
    s = out + s.substr(pos);
  }
  return s;
}

std::string strip_html(const std::string& html) {
  const auto open = html.find("<pre");
  const auto body = html.find('>', open) + 1;
  const auto close = html.rfind("</pre>");
  return unescape(std::regex_replace(html.substr(body, close - body), std::regex("<[^>]*>"), ""));
}

std::string strip_ansi(const std::string& s) {
  return std::regex_replace(s, std::regex("\x1b\\[[0-9;]*m"), "");
}

// Tag balance with void elements; attribute values must be quoted.
bool well_formed(const std::string& html) {
  static const std::regex tag(R"(<(/?)([a-zA-Z]+)((?:\s+[a-zA-Z-]+="[^"<>]*")*)\s*>|<!DOCTYPE html>)");
  std::vector<std::string> stack;
  std::size_t pos = 0;
  for (auto it = std::sregex_iterator(html.begin(), html.end(), tag);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const auto between = html.substr(pos, static_cast<std::size_t>(m.position()) - pos);
    if (between.find('<') != std::string::npos || between.find('>') != std::string::npos)
      return false;
    pos = static_cast<std::size_t>(m.position() + m.length());
    if (!m[2].matched) continue;
    const std::string name = m[2];
    if (name == "meta") continue;
    if (m[1].length() == 0) {
      stack.push_back(name);
    } else {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    }
  }
  return stack.empty() && html.substr(pos).find('<') == std::string::npos;
}

}  // namespace

TEST_CASE("shapley: additive game returns the weights") {
  Rng rng(1);
  for (std::size_t m : {1u, 4u, 9u}) {
    std::vector<double> w(m);
    for (auto& x : w) x = rng.uniform(-1, 1);
    const CoalitionValue v = [&](std::span<const std::size_t> s) {
      double t = 0.0;
      for (auto i : s) t += w[i];
      return t;
    };
    const auto e = shapley_exact(m, v);
    for (std::size_t i = 0; i < m; ++i) CHECK(e.values[i] == doctest::Approx(w[i]).epsilon(1e-12));
    CHECK(e.std_errors.empty());
    const auto s = shapley_sampled(m, v, 5, 3);
    for (std::size_t i = 0; i < m; ++i) CHECK(s.values[i] == doctest::Approx(w[i]).epsilon(1e-12));
  }
}

TEST_CASE("shapley: exact matches the factorial oracle on random games") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const std::size_t m = 2 + rng.below(5);
    std::vector<double> table(std::size_t{1} << m);
    for (auto& x : table) x = rng.uniform(-1, 1);
    const CoalitionValue v = [&](std::span<const std::size_t> s) {
      std::size_t mask = 0;
      for (auto i : s) mask |= std::size_t{1} << i;
      return table[mask];
    };
    const auto e = shapley_exact(m, v);
    const auto o = factorial_oracle(m, v);
    for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(e.values[i] - o[i]) < 1e-12);
    CHECK(std::abs(std::accumulate(e.values.begin(), e.values.end(), 0.0) -
                   (table.back() - table[0])) < 1e-12);
  }
  CHECK_THROWS_AS(shapley_exact(kMaxExactTokens + 1, [](auto) { return 0.0; }), SizeError);
}

TEST_CASE("shapley: a single ordering telescopes exactly") {
  Rng rng(3);
  std::vector<double> table(64);
  for (auto& x : table) x = rng.uniform();
  const CoalitionValue v = [&](std::span<const std::size_t> s) {
    std::size_t mask = 0;
    for (auto i : s) mask |= std::size_t{1} << i;
    return table[mask];
  };
  const std::vector<std::size_t> identity = {0, 1, 2, 3, 4, 5};
  const auto e = shapley_permutations(6, v, {identity});
  std::size_t mask = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double before = table[mask];
    mask |= std::size_t{1} << i;
    CHECK(e.values[i] == table[mask] - before);
  }
  CHECK(std::abs(std::accumulate(e.values.begin(), e.values.end(), 0.0) -
                 (table.back() - table[0])) < 1e-15);
  CHECK_THROWS_AS(shapley_permutations(6, v, {{0, 1, 2}}), ValidationError);
  CHECK_THROWS_AS(shapley_sampled(6, v, 0, 1), ValidationError);
}

TEST_CASE("value_function: full set, empty set and manual deletion") {
  const auto& b = bundle();
  const auto text = short_docs(5, 1, 41)[0];
  const std::vector<std::size_t> all = {0, 1, 2, 3, 4};
  for (std::size_t target = 0; target < 2; ++target) {
    CHECK(value_function(b, text, all, target) == predict(b, text).probabilities[target]);
    CHECK(value_function(b, text, {}, target) == predict(b, "").probabilities[target]);
  }
  const auto toks = tokenize(text).tokens;
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<std::size_t> s;
    std::string kept;
    for (std::size_t i = 0; i < 5; ++i)
      if (mask & (1u << i)) {
        s.push_back(i);
        kept += (kept.empty() ? "" : " ") + toks[i];
      }
    CHECK(std::abs(value_function(b, text, s, 0) - predict(b, kept).probabilities[0]) < 1e-12);
  }
  const std::vector<std::size_t> bad = {7};
  CHECK_THROWS_AS(value_function(b, text, bad, 0), ValidationError);
  const std::vector<std::size_t> unsorted = {2, 1};
  CHECK_THROWS_AS(value_function(b, text, unsorted, 0), ValidationError);

  ModelBundle zero = b;
  zero.bow = bow_zero(b.vocab.size(), 4, 2);
  zero.cnn = cnn_zero(b.cnn_vocab.size(), 2, CnnShape{4, 3, 3});
  CHECK(value_function(zero, text, {}, 1) == doctest::Approx(0.5));
}

TEST_CASE("explain_exact: efficiency on 8-token documents") {
  const auto& b = bundle();
  for (const auto& text : short_docs(8, 5, 42)) {
    const auto a = explain_exact(b, text);
    REQUIRE(a.values.size() == 8);
    CHECK(a.target_label == predict(b, text).label);
    const double sum = std::accumulate(a.values.begin(), a.values.end(), 0.0);
    CHECK(std::abs(sum - (a.full_value - a.baseline_value)) < 1e-9);
    CHECK(a.full_value == predict(b, text).probabilities[a.target_label]);
    for (std::size_t i = 0; i < 8; ++i)
      CHECK(text.substr(a.token_spans[i].start, a.token_spans[i].end - a.token_spans[i].start) ==
            a.tokens[i]);
  }
  const auto long_text = short_docs(20, 1, 43)[0];
  CHECK_THROWS_AS(explain_exact(b, long_text), SizeError);
}

TEST_CASE("explain_exact: dummy and symmetric tokens") {
  const auto& b = bundle();
  REQUIRE(b.vocab.find("zqxjv") < 0);
  REQUIRE(b.cnn_vocab.find("zqxjv") < 0);
  for (const auto& text : short_docs(6, 3, 44)) {
    const auto a = explain_exact(b, text + " zqxjv");
    CHECK(std::abs(a.values.back()) < 1e-9);
  }
  const auto a = explain_exact(b, "lease lease lease oil gas");
  CHECK(std::abs(a.values[0] - a.values[1]) < 1e-9);
  CHECK(std::abs(a.values[1] - a.values[2]) < 1e-9);
  const auto d = explain_exact(b, "oil gas gas lease");
  CHECK(std::abs(d.values[1] - d.values[2]) < 1e-9);
}

TEST_CASE("explain_sampled: accuracy against exact, determinism and standard errors") {
  const auto& b = bundle();
  const auto text = short_docs(8, 1, 45)[0];
  const auto exact = explain_exact(b, text);
  double hottest = 0.0;
  for (double x : exact.values) hottest = std::max(hottest, std::abs(x));
  CHECK(hottest > 0.02);
  const auto s = explain_sampled(b, text, 2000, 11);
  CHECK(mean_abs_diff(s.values, exact.values) < 0.02);
  REQUIRE(s.std_errors.size() == 8);
  for (double se : s.std_errors) CHECK(se >= 0.0);
  const auto again = explain_sampled(b, text, 2000, 11);
  CHECK(again.values == s.values);
  CHECK(again.std_errors == s.std_errors);
  CHECK(s.target_label == exact.target_label);
}

TEST_CASE("explain_sampled: expected error shrinks as permutations double") {
  const auto& b = bundle();
  int violations = 0;
  for (const auto& text : short_docs(8, 10, 46)) {
    const auto exact = explain_exact(b, text);
    double prev = INFINITY;
    bool ok = true;
    for (std::size_t n : {250u, 500u, 1000u, 2000u}) {
      // Expectation over independent seeds.
      double err = 0.0;
      for (std::uint64_t seed = 1; seed <= 16; ++seed)
        err += mean_abs_diff(explain_sampled(b, text, n, seed).values, exact.values) / 16;
      ok = ok && err <= prev;
      prev = err;
    }
    if (!ok) ++violations;
  }
  CHECK(violations <= 1);
}

TEST_CASE("overlay: stripping markup restores the source") {
  const std::string text = "Oil & Gas <Lease>\n  \"NW/4\" of Sec. 12 - it's recorded";
  const auto seq = tokenize(text);
  Rng rng(5);
  std::vector<double> zeros(seq.size(), 0.0), mixed(seq.size());
  for (auto& x : mixed) x = rng.uniform(-1, 1);
  for (const auto* vals : {&zeros, &mixed}) {
    const auto html = render_overlay(text, seq.offsets, *vals, OverlayFormat::kHtml);
    CHECK(strip_html(html) == text);
    CHECK(well_formed(html));
    CHECK(strip_ansi(render_overlay(text, seq.offsets, *vals, OverlayFormat::kAnsi)) == text);
  }
  const auto html = render_overlay(text, seq.offsets, zeros, OverlayFormat::kHtml);
  CHECK(html.find("rgba(220,38,38,0.000)") != std::string::npos);
}

TEST_CASE("overlay: hottest token carries full intensity") {
  const std::string text = "one two three four five six seven eight nine ten";
  const auto seq = tokenize(text);
  std::vector<double> v(10, 0.01);
  v[3] = -0.4;
  const auto html = render_overlay(text, seq.offsets, v, OverlayFormat::kHtml);
  CHECK(well_formed(html));
  const auto at = html.find(">four</span>");
  REQUIRE(at != std::string::npos);
  const auto open = html.rfind("<span", at);
  const auto tag = html.substr(open, at - open);
  CHECK(tag.find("class=\"neg\"") != std::string::npos);
  CHECK(tag.find("rgba(37,99,235,1.000)") != std::string::npos);
  CHECK(html.find("rgba(220,38,38,0.025)") != std::string::npos);
  const auto ansi = render_overlay(text, seq.offsets, v, OverlayFormat::kAnsi);
  CHECK(ansi.find("\x1b[30;48;2;64;64;255mfour") != std::string::npos);
}

TEST_CASE("overlay: invalid spans") {
  const std::string text = "abc def";
  CHECK_THROWS_AS(render_overlay(text, {{0, 3}, {2, 5}}, {0.1, 0.2}, OverlayFormat::kHtml),
                  ValidationError);
  CHECK_THROWS_AS(render_overlay(text, {{0, 9}}, {0.1}, OverlayFormat::kAnsi), ValidationError);
  CHECK_THROWS_AS(render_overlay(text, {{0, 3}}, {0.1, 0.2}, OverlayFormat::kAnsi),
                  ValidationError);
  CHECK(parse_overlay_format("html") == OverlayFormat::kHtml);
  CHECK(parse_overlay_format("ansi") == OverlayFormat::kAnsi);
  CHECK_THROWS(parse_overlay_format("pdf"));
}
