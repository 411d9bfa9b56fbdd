#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kalls/error.hpp"
#include "kalls/geometry.hpp"
#include "kalls/problems.hpp"
#include "kalls/random.hpp"

namespace kalls {

struct QueryRecord {
  std::size_t order;       // 1-based position in the query sequence
  std::size_t pool_index;
  Label label;
  std::size_t charged_total;
};

// Simulated labeler over a pool. Labels are drawn lazily from
// Bernoulli(eta(X_i)) on first request and cached. Each charged request
// costs one unit of budget; cached repeats are free unless
// `recharge_duplicates` is set.
class BudgetedOracle {
 public:
  BudgetedOracle(const Pool& pool, const ProblemSpec& spec, std::size_t budget, std::uint64_t seed,
                 bool recharge_duplicates = false)
      : pool_(&pool),
        spec_(&spec),
        budget_(budget),
        recharge_duplicates_(recharge_duplicates),
        cache_(pool.size(), kUnlabeled),
        rng_(seed) {
    detail::require(pool.dim() == spec.dim, "oracle: pool and problem dimensions differ");
  }

  // Label of pool point i, or nullopt if the request would need budget
  // that is no longer there.
  std::optional<Label> query(std::size_t i) {
    detail::require(i < pool_->size(), "oracle: pool index " + std::to_string(i) + " out of range");
    const bool cached = cache_[i] != kUnlabeled;
    const bool charges = !cached || recharge_duplicates_;
    if (charges && charged_ >= budget_) return std::nullopt;
    if (!cached) {
      const double eta = spec_->eta((*pool_)[i]);
      cache_[i] = rng_.bernoulli(eta) ? 1 : 0;
      ++distinct_;
    }
    if (charges) ++charged_;
    log_.push_back({log_.size() + 1, i, cache_[i], charged_});
    return cache_[i];
  }

  // True if querying i right now would cost a unit of budget.
  bool would_charge(std::size_t i) const { return cache_.at(i) == kUnlabeled || recharge_duplicates_; }

  bool is_cached(std::size_t i) const { return cache_.at(i) != kUnlabeled; }

  std::size_t remaining() const { return budget_ - charged_; }
  std::size_t charged() const { return charged_; }
  std::size_t budget() const { return budget_; }
  std::size_t distinct_labeled() const { return distinct_; }
  bool recharge_duplicates() const { return recharge_duplicates_; }
  const std::vector<QueryRecord>& log() const { return log_; }

  void write_log_csv(std::ostream& os) const {
    os << "order,pool_index,label,charged_total\n";
    for (const auto& r : log_)
      os << r.order << ',' << r.pool_index << ',' << r.label << ',' << r.charged_total << '\n';
  }

 private:
  static constexpr signed char kUnlabeled = -1;

  const Pool* pool_;
  const ProblemSpec* spec_;
  std::size_t budget_;
  bool recharge_duplicates_;
  std::size_t charged_ = 0;
  std::size_t distinct_ = 0;
  std::vector<signed char> cache_;
  std::vector<QueryRecord> log_;
  Rng rng_;
};

}  // namespace kalls
