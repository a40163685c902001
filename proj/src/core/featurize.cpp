// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/featurize.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexsort/corpus.hpp"

namespace lexsort {
namespace {

// Decodes one UTF-8 code point starting at text[i]; advances i. Invalid
// sequences decode as U+FFFD one byte at a time.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > text.size()) {
    ++i;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp == 0xFFFD) return false;
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 punct/space
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp == 0x1680 || cp == 0x180E) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation + spaces
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;  // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK symbols and punctuation
  if (cp == 0xFEFF) return false;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  return true;
}

void append_lower_utf8(std::string& out, char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') cp += 32;
  else if ((cp >= 0xC0 && cp <= 0xDE && cp != 0xD7)) cp += 32;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  std::size_t i = 0;
  std::string current;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t pos = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_word_char(cp)) {
      if (!in_token) {
        in_token = true;
        start = pos;
        current.clear();
      }
      append_lower_utf8(current, cp);
    } else if (in_token) {
      seq.tokens.push_back(current);
      seq.offsets.push_back({start, pos});
      in_token = false;
    }
  }
  if (in_token) {
    seq.tokens.push_back(current);
    seq.offsets.push_back({start, text.size()});
  }
  return seq;
}

TokenSequence truncate(const TokenSequence& seq, std::size_t window) {
  if (window == 0) throw ValidationError("window must be >= 1");
  if (seq.size() <= window) return seq;
  TokenSequence out;
  out.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(window));
  out.offsets.assign(seq.offsets.begin(), seq.offsets.begin() + static_cast<std::ptrdiff_t>(window));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

NgramCounts extract_ngrams(const TokenSequence& seq, std::size_t n_min, std::size_t n_max) {
  if (n_min == 0 || n_min > n_max) throw ValidationError("n-gram orders must satisfy 1 <= n_min <= n_max");
  NgramCounts counts;
  for_each_ngram(seq.tokens, n_min, n_max, [&](const std::string& g) { ++counts[g]; });
  return counts;
}

Vocab::Vocab(std::size_t n_min, std::size_t n_max, std::size_t min_doc_freq,
             std::vector<std::pair<std::string, std::uint32_t>> entries)
    : n_min_(n_min), n_max_(n_max), min_doc_freq_(min_doc_freq) {
  if (n_min == 0 || n_min > n_max) throw ValidationError("n-gram orders must satisfy 1 <= n_min <= n_max");
  terms_.reserve(entries.size());
  doc_freq_.reserve(entries.size());
  index_.reserve(entries.size());
  for (auto& [term, df] : entries) {
    if (!index_.emplace(term, static_cast<std::uint32_t>(terms_.size())).second)
      throw CorruptionError("duplicate vocabulary entry '" + term + "'");
    terms_.push_back(std::move(term));
    doc_freq_.push_back(df);
  }
}

std::int64_t Vocab::find(const std::string& ngram) const {
  auto it = index_.find(ngram);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

Vocab build_vocab(const std::vector<TokenSequence>& docs, const VocabParams& p) {
  if (docs.empty()) throw ValidationError("cannot build a vocabulary from no documents");
  if (p.n_min == 0 || p.n_min > p.n_max) throw ValidationError("n-gram orders must satisfy 1 <= n_min <= n_max");
  if (p.max_size == 0) throw ValidationError("max vocabulary size must be >= 1");
  std::unordered_map<std::string, std::uint32_t> df;
  std::unordered_set<std::string> seen;
  for (const auto& seq : docs) {
    seen.clear();
    for_each_ngram(seq.tokens, p.n_min, p.n_max, [&](const std::string& g) {
      if (seen.insert(g).second) ++df[g];
    });
  }
  std::vector<std::pair<std::string, std::uint32_t>> entries;
  for (auto& [g, count] : df)
    if (count >= p.min_doc_freq) entries.emplace_back(g, count);
  if (entries.empty())
    throw ConfigurationError("empty vocabulary: no n-gram reaches min_doc_freq=" +
                             std::to_string(p.min_doc_freq));
  auto ranked = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  if (entries.size() > p.max_size) {
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(p.max_size),
                      entries.end(), ranked);
    entries.resize(p.max_size);
  } else {
    std::sort(entries.begin(), entries.end(), ranked);
  }
  return Vocab(p.n_min, p.n_max, p.min_doc_freq, std::move(entries));
}

Vocab build_vocab(const Dataset& train, std::size_t window, const VocabParams& params) {
  std::vector<TokenSequence> docs;
  docs.reserve(train.size());
  for (const auto& d : train) docs.push_back(truncate(tokenize(d.text), window));
  return build_vocab(docs, params);
}

FeatureVector vectorize(const TokenSequence& seq, const Vocab& vocab, std::size_t window) {
  const TokenSequence cut = truncate(seq, window);
  std::map<std::uint32_t, std::size_t> counts;
  std::size_t total = 0;
  for_each_ngram(cut.tokens, vocab.n_min(), vocab.n_max(), [&](const std::string& g) {
    ++total;
    const auto idx = vocab.find(g);
    if (idx >= 0) ++counts[static_cast<std::uint32_t>(idx)];
  });
  FeatureVector fv;
  fv.indices.reserve(counts.size());
  fv.values.reserve(counts.size());
  for (const auto& [idx, c] : counts) {
    fv.indices.push_back(idx);
    fv.values.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return fv;
}

}  // namespace lexsort
