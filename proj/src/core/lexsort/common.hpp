// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lexsort {

inline constexpr std::string_view kVersion = "0.3.0";

// Error categories map 1:1 onto the C API status codes.
enum class ErrorKind {
  kValidation,
  kTaxonomy,
  kIo,
  kCorruption,
  kUnsupportedVersion,
  kTraining,
  kConfiguration,
  kSize,
  kTransport,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::kValidation, w) {}
};
struct TaxonomyError : Error {
  explicit TaxonomyError(const std::string& w) : Error(ErrorKind::kTaxonomy, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};
struct CorruptionError : Error {
  explicit CorruptionError(const std::string& w) : Error(ErrorKind::kCorruption, w) {}
};
struct UnsupportedVersionError : Error {
  explicit UnsupportedVersionError(const std::string& w)
      : Error(ErrorKind::kUnsupportedVersion, w) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error(ErrorKind::kTraining, w) {}
};
struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& w)
      : Error(ErrorKind::kConfiguration, w) {}
};
struct SizeError : Error {
  explicit SizeError(const std::string& w) : Error(ErrorKind::kSize, w) {}
};

enum class Task { kBinary, kMultiClass };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
std::size_t task_label_count(Task task);

// Seeded generator whose derived draws are fully specified here, so results
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes several integers into one seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

std::vector<std::size_t> iota_indices(std::size_t n);

}  // namespace lexsort
