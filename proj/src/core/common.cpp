// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/common.hpp"

#include <limits>
#include <numeric>

namespace lexsort {

std::string_view task_name(Task task) {
  return task == Task::kBinary ? "binary" : "multiclass";
}

Task parse_task(std::string_view name) {
  if (name == "binary") return Task::kBinary;
  if (name == "multiclass" || name == "multi-class" || name == "multi_class")
    return Task::kMultiClass;
  throw ValidationError("unknown task '" + std::string(name) +
                        "' (expected binary or multiclass)");
}

std::size_t task_label_count(Task task) { return task == Task::kBinary ? 2 : 9; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::below called with n = 0");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

}  // namespace lexsort
