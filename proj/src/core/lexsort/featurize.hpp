// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Tokenization, context-window truncation, n-gram extraction, vocabulary
// construction and sparse relative-frequency vectors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexsort/common.hpp"

namespace lexsort {

class Dataset;

// Byte span [start, end) into the UTF-8 source text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<Span> offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Lowercased alphanumeric runs. ASCII letters/digits and non-ASCII letters
// form tokens; whitespace, ASCII punctuation and the common Unicode
// punctuation/space blocks separate them.
TokenSequence tokenize(std::string_view text);

TokenSequence truncate(const TokenSequence& seq, std::size_t window);

// Joins tokens of a sub-range with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end);

using NgramCounts = std::map<std::string, std::size_t>;

NgramCounts extract_ngrams(const TokenSequence& seq, std::size_t n_min, std::size_t n_max);

// Calls fn(ngram) for every contiguous n-gram with order in [n_min, n_max],
// in order of increasing n then position.
template <typename Fn>
void for_each_ngram(const std::vector<std::string>& tokens, std::size_t n_min,
                    std::size_t n_max, Fn&& fn) {
  std::string gram;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      gram.clear();
      for (std::size_t k = 0; k < n; ++k) {
        if (k) gram += ' ';
        gram += tokens[i + k];
      }
      fn(static_cast<const std::string&>(gram));
    }
  }
}

struct VocabParams {
  std::size_t n_min = 1;
  std::size_t n_max = 3;
  std::size_t min_doc_freq = 2;
  std::size_t max_size = 50000;
};

class Vocab {
 public:
  Vocab() = default;
  // Entries in index order with their training document frequencies.
  Vocab(std::size_t n_min, std::size_t n_max, std::size_t min_doc_freq,
        std::vector<std::pair<std::string, std::uint32_t>> entries);

  std::size_t size() const { return terms_.size(); }
  std::size_t n_min() const { return n_min_; }
  std::size_t n_max() const { return n_max_; }
  std::size_t min_doc_freq() const { return min_doc_freq_; }
  const std::string& term(std::size_t index) const { return terms_[index]; }
  std::uint32_t doc_frequency(std::size_t index) const { return doc_freq_[index]; }
  // Returns -1 when the n-gram is not in the vocabulary.
  std::int64_t find(const std::string& ngram) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.n_min_ == b.n_min_ && a.n_max_ == b.n_max_ &&
           a.min_doc_freq_ == b.min_doc_freq_ && a.terms_ == b.terms_ &&
           a.doc_freq_ == b.doc_freq_;
  }

 private:
  std::size_t n_min_ = 1;
  std::size_t n_max_ = 1;
  std::size_t min_doc_freq_ = 1;
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> doc_freq_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

Vocab build_vocab(const Dataset& train, std::size_t window, const VocabParams& params);
Vocab build_vocab(const std::vector<TokenSequence>& truncated_docs,
                  const VocabParams& params);

struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

FeatureVector vectorize(const TokenSequence& seq, const Vocab& vocab, std::size_t window);

}  // namespace lexsort
