#pragma once

// k-nn active learning under local (mass) smoothness.
//
// The learner walks a pool in order. For each point it first asks whether
// an earlier, confidently labeled point is close enough (in pool mass) to
// vouch for it. If not, the point becomes informative: the labels of its
// nearest pool neighbours are requested one at a time until their mean is
// separated from 1/2 by a Hoeffding radius, or until a cap/budget is hit.
// The final classifier is 1-NN over the informative points whose labels
// passed the same confidence test.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kalls/classifier.hpp"
#include "kalls/error.hpp"
#include "kalls/geometry.hpp"
#include "kalls/oracle.hpp"
#include "kalls/problems.hpp"

namespace kalls {

struct KallsParams {
  double alpha = 1.0;    // mass-smoothness exponent, (0, 1]
  double L = 1.0;        // mass-smoothness constant, >= 1
  double beta = 0.0;     // margin-noise exponent, >= 0
  double C = 1.0;        // margin-noise constant, >= 1
  double delta = 0.1;    // confidence, (0, 1)
  double epsilon = 0.1;  // target excess risk, (0, 1)

  static KallsParams from_problem(const ProblemSpec& spec, double epsilon, double delta) {
    return {spec.alpha, spec.L, spec.beta, spec.C, delta, epsilon};
  }

  void validate(std::size_t dim) const {
    detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    detail::require(L >= 1.0, "L must be at least 1");
    detail::require(beta >= 0.0, "beta must be nonnegative");
    detail::require(C >= 1.0, "C must be at least 1");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    detail::require(alpha * beta <= static_cast<double>(dim),
                    "alpha * beta must not exceed the dimension");
  }
};

namespace detail {

// ceil() that does not round an integer-valued result up because of a
// last-bit error in pow/log.
inline std::size_t ceil_count(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(v));
}

inline double log_union(std::size_t s, double delta) {
  const double sd = static_cast<double>(s);
  return std::log(4.0 * sd * sd / delta);
}

}  // namespace detail

// Margin below which the learner gives up on agreeing with the Bayes rule:
// max(eps/2, (eps / 2C)^(1/(beta+1))).
inline double delta_hat(double epsilon, double C, double beta) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "delta_hat: epsilon must lie in (0, 1)");
  detail::require(C >= 1.0, "delta_hat: C must be at least 1");
  detail::require(beta >= 0.0, "delta_hat: beta must be nonnegative");
  return std::max(epsilon / 2.0, std::pow(epsilon / (2.0 * C), 1.0 / (beta + 1.0)));
}

// Neighbour cap for the s-th examined point:
// ceil(16 / dh^2 * (ln(1/dh) + ln(4 s^2 / delta))).
inline std::size_t k_cap(std::size_t s, double dh, double delta) {
  detail::require(s >= 1, "k_cap: s must be at least 1");
  detail::require(dh > 0.0 && dh < 1.0, "k_cap: delta_hat must lie in (0, 1)");
  detail::require(delta > 0.0 && delta < 1.0, "k_cap: delta must lie in (0, 1)");
  return detail::ceil_count(16.0 / (dh * dh) * (std::log(1.0 / dh) + detail::log_union(s, delta)));
}

// Hoeffding radius sqrt(ln(4 s^2 / delta) / k).
inline double tau(std::size_t k, std::size_t s, double delta) {
  detail::require(k >= 1, "tau: k must be at least 1");
  detail::require(s >= 1, "tau: s must be at least 1");
  detail::require(delta > 0.0 && delta < 1.0, "tau: delta must lie in (0, 1)");
  return std::sqrt(detail::log_union(s, delta) / static_cast<double>(k));
}

struct ActiveSetEntry {
  std::size_t center_index = 0;  // pool index of the informative point
  std::size_t s = 0;             // 1-based loop counter when it was examined
  Label y_hat = 0;
  std::vector<std::pair<std::size_t, Label>> queries;
  bool stopped_early = false;  // the confidence exit fired

  double mean() const {
    std::size_t ones = 0;
    for (const auto& q : queries) ones += q.second == 1;
    return static_cast<double>(ones) / static_cast<double>(queries.size());
  }

  double radius(double delta) const { return tau(queries.size(), s, delta); }

  // |mean - 1/2| - tau; positive iff the label passes the confidence test.
  double confidence_margin(double delta) const {
    return std::abs(mean() - 0.5) - radius(delta);
  }
};

using ActiveSet = std::vector<ActiveSetEntry>;

struct ConfidentLabel {
  Label y_hat = 0;
  std::vector<std::pair<std::size_t, Label>> queries;
  bool stopped_early = false;
};

// Requests labels of the nearest pool neighbours of `center` (itself first)
// until the running mean clears tau(k, s, delta), k reaches the cap, or the
// oracle refuses for lack of budget. An empty query list means no label
// could be obtained and must not be stored.
inline ConfidentLabel confident_label(const Pool& pool, BudgetedOracle& oracle, std::size_t s,
                                      std::size_t center, const KallsParams& params) {
  detail::require(center < pool.size(), "confident_label: center out of range");
  const double dh = delta_hat(params.epsilon, params.C, params.beta);
  const std::size_t cap = std::min(k_cap(s, dh, params.delta), pool.size());
  const auto neighbors = k_nearest(pool, pool[center], cap);

  ConfidentLabel out;
  out.queries.reserve(cap);
  std::size_t ones = 0;
  for (std::size_t k = 1; k <= cap; ++k) {
    const auto label = oracle.query(neighbors[k - 1]);
    if (!label) break;
    out.queries.emplace_back(neighbors[k - 1], *label);
    ones += *label == 1;
    const double mean = static_cast<double>(ones) / static_cast<double>(k);
    if (std::abs(mean - 0.5) > tau(k, s, params.delta)) {
      out.stopped_early = true;
      break;
    }
  }
  if (!out.queries.empty()) {
    out.y_hat = 2 * ones >= out.queries.size() ? 1 : 0;
  }
  return out;
}

namespace detail {

// Largest integer count c with c / m <= bound, or -1 if none.
inline long long max_admissible_count(double m, double bound) {
  double t = std::floor(m * bound);
  if (!std::isfinite(t) || t > 1e18) return std::numeric_limits<long long>::max();
  while ((t + 1.0) / m <= bound) t += 1.0;
  while (t >= 0.0 && t / m > bound) t -= 1.0;
  return static_cast<long long>(t);
}

}  // namespace detail

namespace detail {

struct Witness {
  double radius;        // rho(X_center, X_s')
  long long max_count;  // largest admissible ball count
};

// Entries able to vouch for `center`. Sets `trivially` when some entry
// admits every possible pool count.
inline std::vector<Witness> reliability_witnesses(const Pool& pool, const ActiveSet& active,
                                                  std::size_t center, const KallsParams& params,
                                                  bool& trivially) {
  trivially = false;
  const PointView x = pool[center];
  const double exponent = static_cast<double>(pool.dim()) / params.alpha;
  const auto w = static_cast<long long>(pool.size());
  std::vector<Witness> out;
  for (const auto& e : active) {
    const double pi = e.confidence_margin(params.delta);
    if (!(pi > 0.0)) continue;
    const double m = log_union(e.s, params.delta) / (2.0 * pi * pi);
    const long long c = max_admissible_count(m, std::pow(pi, exponent));
    if (c < 0) continue;
    if (c >= w) {
      trivially = true;
      return {};
    }
    out.push_back({distance(x, pool[e.center_index]), c});
  }
  return out;
}

}  // namespace detail

// True iff some stored entry s' with pi = |mean(Q) - 1/2| - tau > 0 has
//   |{X in pool : rho(X_center, X) <= rho(X_center, X_s')}| / m_s' <= pi^(d/alpha),
// where m_s' = ln(4 s'^2 / delta) / (2 pi^2).
inline bool reliable(const Pool& pool, const ActiveSet& active, std::size_t center,
                     const KallsParams& params) {
  detail::require(center < pool.size(), "reliable: center out of range");
  bool trivially = false;
  const auto witnesses = detail::reliability_witnesses(pool, active, center, params, trivially);
  if (trivially) return true;
  if (witnesses.empty()) return false;
  long long widest = 0;
  for (const auto& wi : witnesses) widest = std::max(widest, wi.max_count);
  // count_within(x, r) <= c  iff  the (c+1)-th smallest distance exceeds r.
  const auto prefix = sorted_distance_prefix(pool, pool[center], static_cast<std::size_t>(widest) + 1);
  return std::any_of(witnesses.begin(), witnesses.end(), [&prefix](const detail::Witness& wi) {
    return prefix[static_cast<std::size_t>(wi.max_count)] > wi.radius;
  });
}

// Same test answered through a projection index over the pool.
inline bool reliable(const Pool& pool, const ProjectionIndex& index, const ActiveSet& active,
                     std::size_t center, const KallsParams& params) {
  detail::require(center < pool.size(), "reliable: center out of range");
  bool trivially = false;
  const auto witnesses = detail::reliability_witnesses(pool, active, center, params, trivially);
  if (trivially) return true;
  const PointView x = pool[center];
  return std::any_of(witnesses.begin(), witnesses.end(), [&](const detail::Witness& wi) {
    const auto c = static_cast<std::size_t>(wi.max_count);
    return index.count_within(x, wi.radius, c + 1) <= c;
  });
}

// 1-NN over the entries whose labels pass |mean(Q) - 1/2| > tau(|Q|, s', delta).
// If none pass, the classifier is flagged degenerate and answers the
// majority y_hat of the whole active set (ties to 1), or 0 when empty.
inline NNClassifier learn(const ActiveSet& active, const Pool& pool, const KallsParams& params) {
  NNClassifier clf(pool.dim(), 1);
  for (const auto& e : active) {
    if (e.confidence_margin(params.delta) > 0.0) clf.add(pool[e.center_index], e.y_hat);
  }
  if (clf.size() > 0) return clf;
  Label fallback = 0;
  if (!active.empty()) {
    const auto ones = std::count_if(active.begin(), active.end(), [](const auto& e) { return e.y_hat == 1; });
    fallback = 2 * static_cast<std::size_t>(ones) >= active.size() ? 1 : 0;
  }
  return NNClassifier::degenerate(pool.dim(), fallback);
}

enum class Decision { Skipped, Labeled, BudgetStop };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Skipped: return "skipped";
    case Decision::Labeled: return "labeled";
    case Decision::BudgetStop: return "budget-stop";
  }
  return "?";
}

struct TraceRow {
  std::size_t s = 0;
  Decision decision = Decision::Skipped;
  std::size_t q_size = 0;
  double mean_q = std::numeric_limits<double>::quiet_NaN();
  double tau = std::numeric_limits<double>::quiet_NaN();
  Label y_hat = -1;
  std::size_t charged_total = 0;
};

struct KallsResult {
  NNClassifier classifier;
  ActiveSet active_set;
  std::vector<TraceRow> trace;
  double delta_hat = 0.0;

  std::size_t retained() const { return classifier.size(); }
  bool degenerate() const { return classifier.is_degenerate(); }
};

inline KallsResult run_kalls(const Pool& pool, BudgetedOracle& oracle, const KallsParams& params) {
  detail::require(!pool.empty(), "run_kalls: empty pool");
  params.validate(pool.dim());
  const double dh = delta_hat(params.epsilon, params.C, params.beta);

  const ProjectionIndex index(pool);
  ActiveSet active;
  std::vector<TraceRow> trace;
  for (std::size_t s = 1; s <= pool.size(); ++s) {
    const std::size_t center = s - 1;
    if (oracle.remaining() == 0) {
      trace.push_back({s, Decision::BudgetStop, 0, NAN, NAN, -1, oracle.charged()});
      break;
    }
    if (reliable(pool, index, active, center, params)) {
      trace.push_back({s, Decision::Skipped, 0, NAN, NAN, -1, oracle.charged()});
      continue;
    }
    auto cl = confident_label(pool, oracle, s, center, params);
    if (cl.queries.empty()) {
      trace.push_back({s, Decision::BudgetStop, 0, NAN, NAN, -1, oracle.charged()});
      break;
    }
    ActiveSetEntry entry{center, s, cl.y_hat, std::move(cl.queries), cl.stopped_early};
    trace.push_back({s, Decision::Labeled, entry.queries.size(), entry.mean(),
                     entry.radius(params.delta), entry.y_hat, oracle.charged()});
    active.push_back(std::move(entry));
  }
  auto clf = learn(active, pool, params);
  return {std::move(clf), std::move(active), std::move(trace), dh};
}

namespace detail {

inline std::string format_real(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "s,decision,q_size,mean_q,tau,y_hat,charged_total\n";
  for (const auto& r : trace) {
    os << r.s << ',' << to_string(r.decision) << ',' << r.q_size << ',' << detail::format_real(r.mean_q)
       << ',' << detail::format_real(r.tau) << ',';
    if (r.y_hat >= 0) os << r.y_hat;
    os << ',' << r.charged_total << '\n';
  }
}

}  // namespace kalls
