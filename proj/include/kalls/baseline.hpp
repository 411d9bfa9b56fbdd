#pragma once

// Passive k_n-NN comparison arm: label the first n pool points and vote
// over the k_n nearest of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "kalls/classifier.hpp"
#include "kalls/error.hpp"
#include "kalls/kalls.hpp"
#include "kalls/oracle.hpp"

namespace kalls {

struct PassiveParams {
  double alpha = 1.0;
  double beta = 0.0;
  std::size_t dim = 1;
  std::optional<std::size_t> k_override;
};

// k_n = clamp(ceil(n^(2 alpha / (2 alpha + d))), 1, n - 1) with unit constant.
inline std::size_t choose_k_n(std::size_t n, const PassiveParams& params) {
  if (params.k_override) {
    detail::require(*params.k_override >= 1, "choose_k_n: k_override must be at least 1");
    return *params.k_override;
  }
  detail::require(n >= 2, "choose_k_n: n must be at least 2");
  detail::require(params.alpha > 0.0 && params.dim >= 1, "choose_k_n: invalid alpha or dimension");
  const double exponent = 2.0 * params.alpha / (2.0 * params.alpha + static_cast<double>(params.dim));
  const std::size_t k = detail::ceil_count(std::pow(static_cast<double>(n), exponent));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

inline NNClassifier train_passive(const Pool& pool, BudgetedOracle& oracle, std::size_t n,
                                  const PassiveParams& params) {
  detail::require(n >= 1, "train_passive: n must be at least 1");
  detail::require(n <= pool.size(), "train_passive: n exceeds the pool size");
  detail::require(n <= oracle.remaining(), "train_passive: budget too small for n labels");
  const std::size_t k = n == 1 ? 1 : choose_k_n(n, params);
  NNClassifier clf(pool.dim(), k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = oracle.query(i);
    detail::require(y.has_value(), "train_passive: oracle refused a label");
    clf.add(pool[i], *y);
  }
  return clf;
}

}  // namespace kalls
