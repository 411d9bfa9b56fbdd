#pragma once

// Euclidean metric-space primitives over a fixed pool of points.
//
// Nearest-neighbour queries are exact brute-force scans. Ties in distance
// are broken by ascending pool index so that every query is deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kalls/error.hpp"

namespace kalls {

using Point = std::vector<double>;
using PointView = std::span<const double>;

// Immutable ordered set of points sharing one dimension. Index is identity.
class Pool {
 public:
  Pool(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    detail::require(dim_ > 0, "pool dimension must be positive");
    detail::require(coords_.size() % dim_ == 0, "pool coordinate count is not a multiple of dim");
    for (double c : coords_) detail::require(std::isfinite(c), "pool coordinates must be finite");
  }

  static Pool from_points(std::size_t dim, const std::vector<Point>& points) {
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (const auto& p : points) {
      detail::require(p.size() == dim, "point dimension does not match pool dimension");
      flat.insert(flat.end(), p.begin(), p.end());
    }
    return Pool(dim, std::move(flat));
  }

  // Convenience for one-dimensional pools.
  static Pool from_scalars(const std::vector<double>& xs) { return Pool(1, xs); }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  PointView operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

  std::span<const double> coords() const { return coords_; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

inline double distance(PointView a, PointView b) {
  detail::require(a.size() == b.size(), "distance: dimension mismatch (" + std::to_string(a.size()) +
                                            " vs " + std::to_string(b.size()) + ")");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

struct Neighbor {
  double dist;
  std::size_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
  }
};

namespace detail {

inline std::vector<Neighbor> all_distances(const Pool& pool, PointView x) {
  require(x.size() == pool.dim(), "query point dimension does not match pool");
  std::vector<Neighbor> out(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = {distance(pool[i], x), i};
  return out;
}

// The k smallest entries in (distance, index) order.
inline std::vector<Neighbor> smallest(std::vector<Neighbor> all, std::size_t k) {
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  all.resize(k);
  return all;
}

}  // namespace detail

// k nearest neighbours of x in (distance, index) order, with their distances.
inline std::vector<Neighbor> nearest_neighbors(const Pool& pool, PointView x, std::size_t k) {
  detail::require(k <= pool.size(), "k_nearest: k=" + std::to_string(k) + " exceeds pool size " +
                                        std::to_string(pool.size()));
  return detail::smallest(detail::all_distances(pool, x), k);
}

inline std::vector<std::size_t> k_nearest(const Pool& pool, PointView x, std::size_t k) {
  const auto nn = nearest_neighbors(pool, x, k);
  std::vector<std::size_t> idx(nn.size());
  std::transform(nn.begin(), nn.end(), idx.begin(), [](const Neighbor& n) { return n.index; });
  return idx;
}

// Number of pool points in the closed ball B(x, r).
inline std::size_t count_within(const Pool& pool, PointView x, double r) {
  detail::require(x.size() == pool.dim(), "query point dimension does not match pool");
  std::size_t count = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (distance(pool[i], x) <= r) ++count;
  }
  return count;
}

// Smallest integer count c with c / w >= p, i.e. ceil(p * w) guarded
// against rounding in the product.
inline std::size_t mass_to_count(double p, std::size_t w) {
  const double target = p * static_cast<double>(w);
  auto c = static_cast<std::size_t>(std::ceil(target));
  while (c > 1 && static_cast<double>(c - 1) / static_cast<double>(w) >= p) --c;
  while (c < w && static_cast<double>(c) / static_cast<double>(w) < p) ++c;
  return std::clamp<std::size_t>(c, 1, w);
}

// Empirical r_p(x): smallest radius whose closed ball holds a fraction >= p
// of the pool. Equals the ceil(p*w)-th smallest distance from x.
inline double empirical_r_p(const Pool& pool, PointView x, double p) {
  detail::require(p > 0.0 && p <= 1.0, "empirical_r_p: p must lie in (0, 1]");
  detail::require(!pool.empty(), "empirical_r_p: empty pool");
  const std::size_t c = mass_to_count(p, pool.size());
  auto all = detail::all_distances(pool, x);
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(c - 1), all.end());
  return all[c - 1].dist;
}

// The `k` smallest distances from x to the pool, sorted ascending.
// count_within(pool, x, r) <= t  iff  t >= w or sorted[t] > r.
inline std::vector<double> sorted_distance_prefix(const Pool& pool, PointView x, std::size_t k) {
  const auto nn = detail::smallest(detail::all_distances(pool, x), k);
  std::vector<double> out(nn.size());
  std::transform(nn.begin(), nn.end(), out.begin(), [](const Neighbor& n) { return n.dist; });
  return out;
}

// Pool points sorted by their first coordinate. Answers closed-ball counts
// exactly: the projection window |x1 - p1| <= r is a superset of the ball,
// and every candidate is confirmed with distance(). In one dimension the
// computed distance is monotone on each side of x along the sorted order,
// so the count reduces to two binary searches.
class ProjectionIndex {
 public:
  explicit ProjectionIndex(const Pool& pool) : pool_(&pool), order_(pool.size()), keys_(pool.size()) {
    for (std::size_t i = 0; i < pool.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&pool](std::size_t a, std::size_t b) {
      return pool[a][0] < pool[b][0] || (pool[a][0] == pool[b][0] && a < b);
    });
    for (std::size_t i = 0; i < order_.size(); ++i) keys_[i] = pool[order_[i]][0];
  }

  // min(count_within(pool, x, r), limit)
  std::size_t count_within(PointView x, double r, std::size_t limit = std::numeric_limits<std::size_t>::max()) const {
    detail::require(x.size() == pool_->dim(), "query point dimension does not match pool");
    const auto first = keys_.begin();
    const auto mid = std::lower_bound(first, keys_.end(), x[0]);
    if (pool_->dim() == 1) {
      auto dist = [&x](double v) { return distance(PointView(&v, 1), x); };
      const auto lo = std::partition_point(first, mid, [&](double v) { return dist(v) > r; });
      const auto hi = std::partition_point(mid, keys_.end(), [&](double v) { return dist(v) <= r; });
      return std::min<std::size_t>(static_cast<std::size_t>(hi - lo), limit);
    }
    // Widened so that underflow in the squared coordinate difference can
    // never exclude a point whose computed distance is <= r.
    const double reach = r * (1.0 + 1e-12) + 1e-150;
    std::size_t count = 0;
    for (auto it = mid; it != keys_.end() && *it - x[0] <= reach; ++it) {
      if (distance((*pool_)[order_[static_cast<std::size_t>(it - first)]], x) <= r && ++count >= limit) return limit;
    }
    for (auto it = mid; it != first && x[0] - *(it - 1) <= reach; --it) {
      if (distance((*pool_)[order_[static_cast<std::size_t>(it - 1 - first)]], x) <= r && ++count >= limit) return limit;
    }
    return count;
  }

 private:
  const Pool* pool_;
  std::vector<std::size_t> order_;
  std::vector<double> keys_;
};

}  // namespace kalls
