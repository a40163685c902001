// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

namespace lexsort {
namespace {

std::vector<std::size_t> members(std::uint64_t mask, std::size_t m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m; ++i)
    if (mask >> i & 1u) out.push_back(i);
  return out;
}

void check_order(const std::vector<std::size_t>& order, std::size_t m) {
  if (order.size() != m) throw ValidationError("ordering length differs from player count");
  std::vector<bool> seen(m, false);
  for (auto i : order) {
    if (i >= m || seen[i]) throw ValidationError("ordering is not a permutation");
    seen[i] = true;
  }
}

// Memoises coalition values when players fit in a 64-bit mask.
class CachedValue {
 public:
  CachedValue(std::size_t m, const CoalitionValue& v) : m_(m), v_(v) {}

  double operator()(const std::vector<bool>& in) {
    std::vector<std::size_t> idx;
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < m_; ++i)
      if (in[i]) {
        idx.push_back(i);
        if (m_ <= 64) mask |= std::uint64_t{1} << i;
      }
    if (m_ > 64) return v_(idx);
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    const double value = v_(idx);
    cache_.emplace(mask, value);
    return value;
  }

 private:
  std::size_t m_;
  const CoalitionValue& v_;
  std::unordered_map<std::uint64_t, double> cache_;
};

std::size_t resolve_target(const ModelBundle& bundle, const TokenSequence& cut,
                           std::optional<std::size_t> target) {
  if (target) {
    if (*target >= bundle.n_labels())
      throw ValidationError("target label index " + std::to_string(*target) + " out of range");
    return *target;
  }
  return predict_tokens(bundle, cut).label;
}

Attribution wrap(const TokenSequence& cut, std::size_t target, ShapleyEstimate est) {
  Attribution a;
  a.token_spans = cut.offsets;
  a.tokens = cut.tokens;
  a.values = std::move(est.values);
  a.std_errors = std::move(est.std_errors);
  a.target_label = target;
  a.baseline_value = est.baseline_value;
  a.full_value = est.full_value;
  return a;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ShapleyEstimate shapley_exact(std::size_t m, const CoalitionValue& v) {
  if (m > kMaxExactTokens)
    throw SizeError("exact Shapley enumeration supports at most " +
                    std::to_string(kMaxExactTokens) + " tokens (got " + std::to_string(m) +
                    "); use the sampled estimator");
  const std::uint64_t n_masks = std::uint64_t{1} << m;
  std::vector<double> val(n_masks);
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) val[mask] = v(members(mask, m));

  // weight[s] = s! (m - s - 1)! / m!
  std::vector<double> weight(m == 0 ? 1 : m, 0.0);
  for (std::size_t s = 0; s < m; ++s)
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(m - s)) -
                         std::lgamma(static_cast<double>(m) + 1.0));

  ShapleyEstimate est;
  est.values.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double phi = 0.0;
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (val[mask | bit] - val[mask]);
    }
    est.values[i] = phi;
  }
  est.baseline_value = val[0];
  est.full_value = val[n_masks - 1];
  return est;
}

ShapleyEstimate shapley_permutations(std::size_t m, const CoalitionValue& v,
                                     const std::vector<std::vector<std::size_t>>& orders) {
  if (orders.empty()) throw ValidationError("at least one ordering is required");
  for (const auto& o : orders) check_order(o, m);
  CachedValue cv(m, v);
  std::vector<bool> in(m, false);
  ShapleyEstimate est;
  est.baseline_value = cv(in);
  std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
  for (const auto& order : orders) {
    std::fill(in.begin(), in.end(), false);
    double prev = est.baseline_value;
    for (auto i : order) {
      in[i] = true;
      const double cur = cv(in);
      const double d = cur - prev;
      sum[i] += d;
      sum_sq[i] += d * d;
      prev = cur;
    }
    est.full_value = prev;
  }
  if (m == 0) est.full_value = est.baseline_value;
  const double n = static_cast<double>(orders.size());
  est.values.resize(m);
  est.std_errors.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    est.values[i] = sum[i] / n;
    if (orders.size() > 1) {
      const double var = std::max(0.0, (sum_sq[i] - n * est.values[i] * est.values[i]) / (n - 1.0));
      est.std_errors[i] = std::sqrt(var / n);
    }
  }
  return est;
}

ShapleyEstimate shapley_sampled(std::size_t m, const CoalitionValue& v,
                                std::size_t n_permutations, std::uint64_t seed) {
  if (n_permutations == 0) throw ValidationError("n_permutations must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(n_permutations);
  for (std::size_t p = 0; p < n_permutations; ++p) {
    auto order = iota_indices(m);
    rng.shuffle(order);
    orders.push_back(std::move(order));
  }
  return shapley_permutations(m, v, orders);
}

CoalitionValue document_value(const ModelBundle& bundle, const TokenSequence& window_tokens,
                              std::size_t target) {
  if (target >= bundle.n_labels()) throw ValidationError("target label index out of range");
  return [&bundle, &window_tokens, target](std::span<const std::size_t> subset) {
    TokenSequence kept;
    kept.tokens.reserve(subset.size());
    std::size_t prev = 0;
    bool first = true;
    for (auto i : subset) {
      if (i >= window_tokens.size())
        throw ValidationError("token index " + std::to_string(i) + " outside the window of " +
                              std::to_string(window_tokens.size()) + " tokens");
      if (!first && i <= prev) throw ValidationError("token indices must be strictly increasing");
      first = false;
      prev = i;
      kept.tokens.push_back(window_tokens.tokens[i]);
      kept.offsets.push_back(window_tokens.offsets[i]);
    }
    return predict_tokens(bundle, kept).probabilities[static_cast<Eigen::Index>(target)];
  };
}

double value_function(const ModelBundle& bundle, std::string_view text,
                      std::span<const std::size_t> subset, std::size_t target) {
  const TokenSequence cut = truncate(tokenize(text), bundle.window);
  return document_value(bundle, cut, target)(subset);
}

Attribution explain_exact(const ModelBundle& bundle, std::string_view text,
                          std::optional<std::size_t> target) {
  const TokenSequence cut = truncate(tokenize(text), bundle.window);
  const std::size_t t = resolve_target(bundle, cut, target);
  if (cut.size() > kMaxExactTokens)
    throw SizeError("document has " + std::to_string(cut.size()) +
                    " tokens in its window; exact attribution supports at most " +
                    std::to_string(kMaxExactTokens) + ", use the sampled estimator");
  return wrap(cut, t, shapley_exact(cut.size(), document_value(bundle, cut, t)));
}

Attribution explain_sampled(const ModelBundle& bundle, std::string_view text,
                            std::size_t n_permutations, std::uint64_t seed,
                            std::optional<std::size_t> target) {
  const TokenSequence cut = truncate(tokenize(text), bundle.window);
  const std::size_t t = resolve_target(bundle, cut, target);
  return wrap(cut, t,
              shapley_sampled(cut.size(), document_value(bundle, cut, t), n_permutations, seed));
}

OverlayFormat parse_overlay_format(std::string_view name) {
  if (name == "ansi") return OverlayFormat::kAnsi;
  if (name == "html") return OverlayFormat::kHtml;
  throw ValidationError("unknown overlay format '" + std::string(name) + "' (ansi, html)");
}

std::string render_overlay(std::string_view text, const std::vector<Span>& spans,
                           const std::vector<double>& values, OverlayFormat format) {
  if (spans.size() != values.size())
    throw ValidationError("overlay needs one value per span");
  std::vector<std::size_t> order = iota_indices(spans.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return spans[a].start < spans[b].start; });
  std::size_t last_end = 0;
  for (auto i : order) {
    const Span& s = spans[i];
    if (s.start > s.end || s.end > text.size())
      throw ValidationError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                            ") lies outside the text");
    if (s.start < last_end) throw ValidationError("attribution spans overlap");
    last_end = s.end;
  }
  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));

  const bool html = format == OverlayFormat::kHtml;
  std::string out;
  if (html)
    out += "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>token attribution"
           "</title></head><body>\n<pre style=\"white-space:pre-wrap;font-family:monospace;"
           "line-height:1.5\">";
  auto plain = [&](std::string_view s) { out += html ? html_escape(s) : std::string(s); };
  std::size_t pos = 0;
  for (auto i : order) {
    const Span& s = spans[i];
    plain(text.substr(pos, s.start - pos));
    const double v = values[i];
    const double intensity = max_abs > 0.0 ? std::abs(v) / max_abs : 0.0;
    const bool positive = v >= 0.0;
    const std::string_view piece = text.substr(s.start, s.end - s.start);
    if (html) {
      out += "<span class=\"";
      out += positive ? "pos" : "neg";
      out += "\" title=\"";
      out += scientific(v);
      out += "\" style=\"background-color:rgba(";
      out += positive ? "220,38,38," : "37,99,235,";
      out += fixed(intensity, 3);
      out += ")\">";
      out += html_escape(piece);
      out += "</span>";
    } else {
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - 0.75 * intensity)));
      const int r = positive ? 255 : fade;
      const int b = positive ? fade : 255;
      out += "\x1b[30;48;2;" + std::to_string(r) + ";" + std::to_string(fade) + ";" +
             std::to_string(b) + "m";
      out += piece;
      out += "\x1b[0m";
    }
    pos = s.end;
  }
  plain(text.substr(pos));
  if (html) out += "</pre>\n</body></html>\n";
  return out;
}

std::string render_overlay(std::string_view text, const Attribution& attribution,
                           OverlayFormat format) {
  return render_overlay(text, attribution.token_spans, attribution.values, format);
}

}  // namespace lexsort
