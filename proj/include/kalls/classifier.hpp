#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "kalls/error.hpp"
#include "kalls/geometry.hpp"
#include "kalls/problems.hpp"

namespace kalls {

// Majority vote of the k nearest stored points. Distance ties follow the
// storage order; an even split votes 1.
//
// A classifier with no stored points is only valid when flagged degenerate,
// in which case it answers `fallback_label` everywhere.
class NNClassifier {
 public:
  NNClassifier(std::size_t dim, std::size_t k) : dim_(dim), k_(k) {
    detail::require(dim > 0, "classifier: dimension must be positive");
    detail::require(k >= 1, "classifier: k must be at least 1");
  }

  static NNClassifier degenerate(std::size_t dim, Label fallback) {
    NNClassifier c(dim, 1);
    c.degenerate_ = true;
    c.fallback_ = fallback;
    return c;
  }

  void add(PointView x, Label y) {
    detail::require(x.size() == dim_, "classifier: point dimension mismatch");
    coords_.insert(coords_.end(), x.begin(), x.end());
    labels_.push_back(y);
  }

  Label predict(PointView x) const {
    detail::require(x.size() == dim_, "classifier: query dimension mismatch");
    if (labels_.empty()) return fallback_;
    const std::size_t n = labels_.size();
    if (k_ == 1 || n == 1) {
      std::size_t best = 0;
      double best_d = distance(point(0), x);
      for (std::size_t i = 1; i < n; ++i) {
        const double d = distance(point(i), x);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      return labels_[best];
    }
    const std::size_t k = std::min(k_, n);
    std::vector<Neighbor> nn(n);
    for (std::size_t i = 0; i < n; ++i) nn[i] = {distance(point(i), x), i};
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(k - 1), nn.end());
    std::size_t ones = 0;
    for (std::size_t j = 0; j < k; ++j) ones += labels_[nn[j].index] == 1;
    return 2 * ones >= k ? 1 : 0;
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t k() const { return k_; }
  std::size_t dim() const { return dim_; }
  bool is_degenerate() const { return degenerate_; }
  Label fallback_label() const { return fallback_; }
  PointView point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  Label label(std::size_t i) const { return labels_[i]; }

 private:
  std::size_t dim_;
  std::size_t k_;
  std::vector<double> coords_;
  std::vector<Label> labels_;
  bool degenerate_ = false;
  Label fallback_ = 0;
};

}  // namespace kalls
