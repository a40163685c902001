// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Document/label data model, the synthetic courthouse-record generator, label
// noise, deterministic splits and JSONL persistence.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexsort/common.hpp"

namespace lexsort {

enum class BinaryLabel : std::uint8_t { kOilAndGas = 0, kOther = 1 };

enum class Subclass : std::uint8_t {
  kAffidavitOfNonProduction = 0,
  kAffidavitOfProduction,
  kAssignmentOfOilAndGasLease,
  kCorrection,
  kExtension,
  kMemorandumOfLease,
  kOilAndGasLease,
  kRelease,
  kTopLease,
};

inline constexpr std::size_t kSubclassCount = 9;
// Generator categories: the nine subclasses followed by Other.
inline constexpr std::size_t kCategoryCount = kSubclassCount + 1;
inline constexpr std::size_t kOtherCategory = kSubclassCount;

std::string_view binary_label_name(BinaryLabel label);
std::string_view subclass_name(Subclass subclass);
// Exact, case-sensitive lookups used by the JSONL reader.
BinaryLabel parse_binary_label_name(std::string_view name);
Subclass parse_subclass_name(std::string_view name);

struct Label {
  BinaryLabel binary = BinaryLabel::kOther;
  std::optional<Subclass> subclass;

  static Label other() { return {}; }
  static Label oil_and_gas(Subclass s) { return {BinaryLabel::kOilAndGas, s}; }
  static Label from_category(std::size_t category);

  std::size_t category() const;
  // subclass present iff binary == OilAndGas.
  bool is_valid() const;

  friend bool operator==(const Label&, const Label&) = default;
};

// Index of a label within a task's taxonomy: Binary {0: Oil and Gas Document,
// 1: Other}; MultiClass the nine subclasses in declaration order. Returns
// nullopt when the label has no place in the task (Other under MultiClass).
std::optional<std::size_t> task_index(const Label& label, Task task);
std::string_view task_label_name(Task task, std::size_t index);
std::vector<std::string> task_label_names(Task task);

struct Document {
  std::string id;
  std::string text;
  std::string state;
  std::string county;
  Label true_label;
  Label observed_label;

  friend bool operator==(const Document&, const Document&) = default;
};

// Ordered, non-empty collection of documents with unique ids. Immutable.
class Dataset {
 public:
  Dataset(std::vector<Document> documents, std::string provenance);

  const std::vector<Document>& documents() const { return documents_; }
  const Document& operator[](std::size_t i) const { return documents_[i]; }
  std::size_t size() const { return documents_.size(); }
  const std::string& provenance() const { return provenance_; }

  auto begin() const { return documents_.begin(); }
  auto end() const { return documents_.end(); }

  // Structural equality ignores provenance.
  bool same_documents(const Dataset& other) const {
    return documents_ == other.documents_;
  }

 private:
  std::vector<Document> documents_;
  std::string provenance_;
};

struct SignaturePosition {
  enum class Kind { kUniform, kAfterOffset };
  Kind kind = Kind::kUniform;
  std::size_t offset = 0;  // tokens; used by kAfterOffset

  static SignaturePosition uniform() { return {}; }
  static SignaturePosition after_offset(std::size_t k) { return {Kind::kAfterOffset, k}; }
};

struct CorpusSpec {
  std::size_t n_documents = 1000;
  // Indexed by generator category (nine subclasses, then Other).
  std::array<double, kCategoryCount> class_mix = default_class_mix();
  std::size_t min_tokens = 120;
  std::size_t max_tokens = 480;
  std::array<std::vector<std::string>, kCategoryCount> signature_phrases =
      default_signature_phrases();
  // Number of signature phrase occurrences planted per document.
  std::size_t min_signatures = 1;
  std::size_t max_signatures = 3;
  std::size_t boilerplate_vocab_size = 400;
  SignaturePosition signature_position;
  double noise_rate = 0.0;
  std::uint64_t seed = 1;

  static std::array<double, kCategoryCount> default_class_mix();
  static std::array<std::vector<std::string>, kCategoryCount>
  default_signature_phrases();

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// Clean labels: observed_label == true_label for every document.
Dataset generate_corpus(const CorpusSpec& spec);

// generate_corpus followed by inject_label_noise at spec.noise_rate, with the
// noise seed derived from spec.seed.
Dataset generate_noisy_corpus(const CorpusSpec& spec);

// The category-independent filler vocabulary used by the generator.
std::vector<std::string> boilerplate_vocabulary(std::size_t size);

enum class NoiseLevel {
  kBinary,    // flip Oil and Gas <-> Other (a new subclass is drawn when needed)
  kSubclass,  // resample the subclass of Oil and Gas documents
};

Dataset inject_label_noise(const Dataset& dataset, double rate, std::uint64_t seed,
                           NoiseLevel level = NoiseLevel::kBinary);

double noise_ceiling(double rate);

struct SplitFractions {
  double train = 0.76;
  double val = 0.12;
  double test = 0.12;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Largest-remainder sizes over a seeded shuffle.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& fractions);
DatasetSplit split(const Dataset& dataset, const SplitFractions& fractions,
                   std::uint64_t seed);

// Documents whose observed label belongs to the task (MultiClass keeps only
// observed Oil and Gas documents).
Dataset filter_for_task(const Dataset& dataset, Task task);

std::vector<std::size_t> observed_task_indices(const Dataset& dataset, Task task);

Dataset read_jsonl(std::istream& in, const std::string& source);
void write_jsonl(const Dataset& dataset, std::ostream& out);
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace lexsort
