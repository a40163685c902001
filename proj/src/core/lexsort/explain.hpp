// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Token-level Shapley attributions for ensemble predictions and text
// overlays that visualise them.
//
// The characteristic function is deletion based: v(S) is the probability of
// the target label when the document is rebuilt from the tokens in S, in
// their original order. Attribution covers the truncated window only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexsort/ensemble.hpp"
#include "lexsort/featurize.hpp"

namespace lexsort {

inline constexpr std::size_t kMaxExactTokens = 15;

// Value of a coalition given as strictly increasing player indices.
using CoalitionValue = std::function<double(std::span<const std::size_t>)>;

struct ShapleyEstimate {
  std::vector<double> values;
  // Standard error of each value; empty for exact enumeration.
  std::vector<double> std_errors;
  double baseline_value = 0.0;  // v(empty)
  double full_value = 0.0;      // v(all players)
};

// Exact enumeration over all 2^m coalitions; m <= kMaxExactTokens.
ShapleyEstimate shapley_exact(std::size_t m, const CoalitionValue& v);

// Mean marginal contribution over the given orderings; each must be a
// permutation of 0..m-1.
ShapleyEstimate shapley_permutations(std::size_t m, const CoalitionValue& v,
                                     const std::vector<std::vector<std::size_t>>& orders);

// Draws n_permutations uniform orderings from `seed`.
ShapleyEstimate shapley_sampled(std::size_t m, const CoalitionValue& v,
                                std::size_t n_permutations, std::uint64_t seed);

struct Attribution {
  std::vector<Span> token_spans;
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::vector<double> std_errors;  // empty for exact
  std::size_t target_label = 0;    // task-level label index
  double baseline_value = 0.0;
  double full_value = 0.0;
};

// Probability of `target` after keeping only the listed token indices of the
// truncated document. Indices must be strictly increasing and in range.
double value_function(const ModelBundle& bundle, std::string_view text,
                      std::span<const std::size_t> subset, std::size_t target);

// Coalition value bound to one document: tokens of the truncated window.
// Holds references; bundle and tokens must outlive it.
CoalitionValue document_value(const ModelBundle& bundle, const TokenSequence& window_tokens,
                              std::size_t target);

// `target` defaults to the predicted label.
Attribution explain_exact(const ModelBundle& bundle, std::string_view text,
                          std::optional<std::size_t> target = std::nullopt);
Attribution explain_sampled(const ModelBundle& bundle, std::string_view text,
                            std::size_t n_permutations, std::uint64_t seed,
                            std::optional<std::size_t> target = std::nullopt);

enum class OverlayFormat { kAnsi, kHtml };

OverlayFormat parse_overlay_format(std::string_view name);

// Spans must lie inside `text` and must not overlap. Colour intensity is
// |value| / max |value|; red marks positive, blue negative contributions.
std::string render_overlay(std::string_view text, const std::vector<Span>& spans,
                           const std::vector<double>& values, OverlayFormat format);
std::string render_overlay(std::string_view text, const Attribution& attribution,
                           OverlayFormat format);

}  // namespace lexsort
