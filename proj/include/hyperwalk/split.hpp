#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hyperwalk/error.hpp"
#include "hyperwalk/rng.hpp"

namespace hyperwalk {

/// Train / validation / test partition of example ids.
struct LabeledSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<double> fractions;
  std::uint64_t seed = 0;

  bool has_validation() const { return !validation.empty(); }
  std::size_t size() const { return train.size() + validation.size() + test.size(); }

  friend bool operator==(const LabeledSplit&, const LabeledSplit&) = default;
};

/// Part sizes for `n` items by the largest-remainder method; ties go to the
/// earlier part.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> sizes(fractions.size());
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % order.size()]];
  return sizes;
}

/// Seeded uniform random partition (no stratification). `fractions` holds
/// train:test or train:validation:test and must sum to 1.
inline LabeledSplit split_ids(std::vector<std::size_t> ids, const std::vector<double>& fractions, std::uint64_t seed) {
  if (fractions.size() != 2 && fractions.size() != 3) {
    fail(ErrorCategory::invalid_argument, "split needs 2 (train:test) or 3 (train:validation:test) fractions");
  }
  double total = 0.0;
  for (double f : fractions) {
    require(f >= 0.0, "split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorCategory::invalid_argument, "split fractions must sum to 1");

  const auto sizes = apportion(ids.size(), fractions);
  if (sizes[0] == 0) fail(ErrorCategory::invalid_argument, "split leaves the training part empty");

  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(std::span<std::size_t>(ids));
  LabeledSplit s;
  s.fractions = fractions;
  s.seed = seed;
  auto it = ids.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
  it += static_cast<std::ptrdiff_t>(sizes[0]);
  if (fractions.size() == 3) {
    s.validation.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
  }
  s.test.assign(it, ids.end());
  return s;
}

inline LabeledSplit split_ids(std::size_t n, const std::vector<double>& fractions, std::uint64_t seed) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return split_ids(std::move(ids), fractions, seed);
}

}  // namespace hyperwalk
