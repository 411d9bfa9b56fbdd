#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kalls/geometry.hpp"
#include "kalls/random.hpp"

using namespace kalls;

namespace {

Point pt(std::initializer_list<double> v) { return Point(v); }

// Oracle: full sort of (distance, index) pairs.
std::vector<std::size_t> sorted_indices(const std::vector<double>& xs, double x) {
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(xs[a] - x) < std::abs(xs[b] - x); });
  return idx;
}

Pool random_pool(Rng& rng, std::size_t w, std::size_t d, bool coarse) {
  std::vector<double> c(w * d);
  // Coarse grids force many exact distance ties.
  for (auto& v : c) v = coarse ? std::floor(rng.uniform() * 5.0) : rng.uniform(-1.0, 1.0);
  return Pool(d, c);
}

}  // namespace

TEST(Distance, Examples) {
  EXPECT_EQ(distance(pt({0, 0}), pt({0, 0})), 0.0);
  EXPECT_EQ(distance(pt({0, 0}), pt({3, 4})), 5.0);
  EXPECT_EQ(distance(pt({1}), pt({-2})), 3.0);
}

TEST(Distance, DimensionMismatchThrows) {
  EXPECT_THROW(distance(pt({0, 0}), pt({1})), InvalidInput);
}

TEST(Distance, SymmetricAndZeroOnlyForEqual) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    Point a{rng.normal(), rng.normal(), rng.normal()};
    Point b{rng.normal(), rng.normal(), rng.normal()};
    EXPECT_EQ(distance(a, b), distance(b, a));
    EXPECT_GT(distance(a, b), 0.0);
    EXPECT_EQ(distance(a, a), 0.0);
  }
}

TEST(Pool, RejectsBadInput) {
  EXPECT_THROW(Pool(0, {}), InvalidInput);
  EXPECT_THROW(Pool(2, {1.0, 2.0, 3.0}), InvalidInput);
  EXPECT_THROW(Pool(1, {std::numeric_limits<double>::infinity()}), InvalidInput);
  EXPECT_THROW(Pool::from_points(2, {pt({1, 2}), pt({1})}), InvalidInput);
}

TEST(Pool, IndexIsIdentity) {
  const auto pool = Pool::from_points(2, {pt({1, 2}), pt({3, 4})});
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool[1][0], 3.0);
  EXPECT_EQ(pool[1][1], 4.0);
}

TEST(KNearest, Examples) {
  // Distances from 0.9 are 0.9, 0.1 and 1.1, so index 0 is second.
  EXPECT_EQ(k_nearest(Pool::from_scalars({0, 1, 2}), pt({0.9}), 2), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(k_nearest(Pool::from_scalars({0, 1, 2}), pt({1.6}), 2), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(k_nearest(Pool::from_scalars({-1, 1}), pt({0}), 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(k_nearest(Pool::from_scalars({5, 3, 4, 1}), pt({0}), 3), (std::vector<std::size_t>{3, 1, 2}));
}

TEST(KNearest, TooManyThrows) {
  EXPECT_THROW(k_nearest(Pool::from_scalars({0, 1}), pt({0}), 3), InvalidInput);
}

TEST(KNearest, MatchesStableSortOracle) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const std::size_t w = 1 + rng.bits() % 40;
    std::vector<double> xs(w);
    for (auto& v : xs) v = std::floor(rng.uniform() * 7.0) / 2.0;
    const double x = std::floor(rng.uniform() * 7.0) / 2.0;
    const std::size_t k = 1 + rng.bits() % w;
    auto want = sorted_indices(xs, x);
    want.resize(k);
    EXPECT_EQ(k_nearest(Pool::from_scalars(xs), pt({x}), k), want);
  }
}

TEST(KNearest, DistinctAndNondecreasing) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto pool = random_pool(rng, 30, 3, t % 2 == 0);
    const Point x{rng.uniform(), rng.uniform(), rng.uniform()};
    const auto nn = nearest_neighbors(pool, x, 30);
    std::vector<std::size_t> seen;
    for (std::size_t j = 0; j < nn.size(); ++j) {
      seen.push_back(nn[j].index);
      if (j > 0) {
        EXPECT_FALSE(nn[j] < nn[j - 1]);
      }
    }
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
  }
}

TEST(CountWithin, Examples) {
  const auto pool = Pool::from_scalars({0, 1, 2});
  EXPECT_EQ(count_within(pool, pt({0}), 0.0), 1u);
  EXPECT_EQ(count_within(pool, pt({0}), 1.0), 2u);
  EXPECT_EQ(count_within(Pool::from_scalars({0, 0.5, 3}), pt({0.25}), 0.3), 2u);
}

TEST(CountWithin, MonotoneAndCoversPool) {
  Rng rng(7);
  const auto pool = random_pool(rng, 50, 2, false);
  const Point x{0.1, -0.2};
  std::size_t prev = 0;
  for (double r = 0.0; r < 3.0; r += 0.05) {
    const auto c = count_within(pool, x, r);
    EXPECT_GE(c, prev);
    prev = c;
  }
  EXPECT_EQ(count_within(pool, x, std::numeric_limits<double>::infinity()), 50u);
}

TEST(EmpiricalRp, Examples) {
  const auto pool = Pool::from_scalars({0, 1, 2});
  EXPECT_EQ(empirical_r_p(pool, pt({0}), 1.0), 2.0);
  EXPECT_EQ(empirical_r_p(pool, pt({0}), 1.0 / 3.0), 0.0);
  EXPECT_EQ(empirical_r_p(Pool::from_scalars({0, 1, 2, 3}), pt({0}), 0.5), 1.0);
}

TEST(EmpiricalRp, RejectsOutOfRangeP) {
  const auto pool = Pool::from_scalars({0, 1});
  EXPECT_THROW(empirical_r_p(pool, pt({0}), 0.0), InvalidInput);
  EXPECT_THROW(empirical_r_p(pool, pt({0}), 1.5), InvalidInput);
}

TEST(EmpiricalRp, CoversAtLeastPAndIsSmallest) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng.bits() % 50;
    const auto pool = random_pool(rng, w, 1 + t % 3, t % 2 == 0);
    for (std::size_t i = 0; i < w; ++i) {
      for (double p = 0.02; p <= 1.0; p += 0.07) {
        const double r = empirical_r_p(pool, pool[i], p);
        EXPECT_GE(static_cast<double>(count_within(pool, pool[i], r)) / static_cast<double>(w), p);
        // Any strictly smaller distance value covers less than p.
        const double below = std::nextafter(r, -1.0);
        if (r > 0.0) {
          EXPECT_LT(static_cast<double>(count_within(pool, pool[i], below)) / static_cast<double>(w), p);
        }
      }
    }
  }
}

TEST(EmpiricalRp, MatchesKthNeighbourDistance) {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const std::size_t w = 2 + rng.bits() % 40;
    const auto pool = random_pool(rng, w, 2, false);
    const Point x{rng.uniform(), rng.uniform()};
    for (std::size_t k = 1; k <= w; ++k) {
      const auto nn = nearest_neighbors(pool, x, k);
      EXPECT_EQ(nn.back().dist, empirical_r_p(pool, x, static_cast<double>(k) / static_cast<double>(w)));
    }
  }
}

TEST(MassToCount, ExactFractions) {
  EXPECT_EQ(mass_to_count(0.5, 4), 2u);
  EXPECT_EQ(mass_to_count(1.0 / 3.0, 3), 1u);
  EXPECT_EQ(mass_to_count(0.7, 10), 7u);
  EXPECT_EQ(mass_to_count(0.71, 10), 8u);
}

TEST(ProjectionIndex, MatchesBruteForceCount) {
  Rng rng(19);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + t % 3;
    const std::size_t w = 1 + rng.bits() % 60;
    const auto pool = random_pool(rng, w, d, t % 2 == 0);
    const ProjectionIndex index(pool);
    for (std::size_t i = 0; i < w; ++i) {
      // Radii equal to exact pool distances exercise the closed boundary.
      const double r = distance(pool[i], pool[rng.bits() % w]);
      EXPECT_EQ(index.count_within(pool[i], r), count_within(pool, pool[i], r));
      const std::size_t limit = rng.bits() % (w + 1);
      EXPECT_EQ(index.count_within(pool[i], r, limit), std::min(limit, count_within(pool, pool[i], r)));
    }
  }
}
