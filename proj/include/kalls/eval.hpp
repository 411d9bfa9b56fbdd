#pragma once

// Excess risk against the known Bayes rule, margin agreement, log-log
// rate fitting and a few numeric checkers used by the acceptance suite.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kalls/classifier.hpp"
#include "kalls/error.hpp"
#include "kalls/geometry.hpp"
#include "kalls/problems.hpp"
#include "kalls/random.hpp"

namespace kalls {

template <class F>
concept Predictor = requires(const F& f, PointView x) {
  { f(x) } -> std::convertible_to<Label>;
};

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;  // estimated for a fallback classifier
};

// Monte-Carlo estimate of R(f) - R(f*) = E[|2 eta(X) - 1| 1{f(X) != f*(X)}]
// over m fresh draws of X.
template <Predictor F>
RiskEstimate excess_risk(const F& predict, const ProblemSpec& spec, std::size_t m, std::uint64_t seed) {
  detail::require(m >= 1, "excess_risk: m must be at least 1");
  Rng rng(seed);
  std::vector<double> x(spec.dim);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    spec.sampler(rng, x);
    const double eta = spec.eta(x);
    const Label bayes = eta >= 0.5 ? 1 : 0;
    if (static_cast<Label>(predict(PointView(x))) != bayes) {
      const double v = std::abs(2.0 * eta - 1.0);
      sum += v;
      sum_sq += v * v;
    }
  }
  const double md = static_cast<double>(m);
  const double mean = sum / md;
  double var = 0.0;
  if (m > 1) var = std::max(0.0, (sum_sq - md * mean * mean) / (md - 1.0));
  return {mean, std::sqrt(var / md), m, seed, false};
}

inline RiskEstimate excess_risk(const NNClassifier& clf, const ProblemSpec& spec, std::size_t m,
                                std::uint64_t seed) {
  auto est = excess_risk([&clf](PointView x) { return clf.predict(x); }, spec, m, seed);
  est.degenerate = clf.is_degenerate();
  return est;
}

// Fraction of the m draws with |eta - 1/2| > margin on which f agrees with
// the Bayes rule; nullopt when no draw lands beyond the margin.
template <Predictor F>
std::optional<double> margin_agreement(const F& predict, const ProblemSpec& spec, double margin,
                                       std::size_t m, std::uint64_t seed) {
  detail::require(m >= 1, "margin_agreement: m must be at least 1");
  Rng rng(seed);
  std::vector<double> x(spec.dim);
  std::size_t counted = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < m; ++i) {
    spec.sampler(rng, x);
    const double eta = spec.eta(x);
    if (!(std::abs(eta - 0.5) > margin)) continue;
    ++counted;
    agree += static_cast<Label>(predict(PointView(x))) == (eta >= 0.5 ? 1 : 0);
  }
  if (counted == 0) return std::nullopt;
  return static_cast<double>(agree) / static_cast<double>(counted);
}

inline std::optional<double> margin_agreement(const NNClassifier& clf, const ProblemSpec& spec,
                                              double margin, std::size_t m, std::uint64_t seed) {
  return margin_agreement([&clf](PointView x) { return clf.predict(x); }, spec, margin, m, seed);
}

// ---------------------------------------------------------------------------
// Rate fitting

struct RatePoint {
  double n;
  double risk;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<RatePoint> points;   // points used in the fit
  std::vector<RatePoint> dropped;  // risk <= 0, log undefined
};

// Ordinary least squares of ln(risk) on ln(n).
inline RateFit fit_rate(const std::vector<RatePoint>& points) {
  RateFit fit;
  for (const auto& p : points) {
    detail::require(p.n > 0.0, "fit_rate: n must be positive");
    (p.risk > 0.0 ? fit.points : fit.dropped).push_back(p);
  }
  const std::size_t k = fit.points.size();
  detail::require(k >= 2, "fit_rate: fewer than two points with positive risk");
  double mx = 0.0, my = 0.0;
  for (const auto& p : fit.points) {
    mx += std::log(p.n);
    my += std::log(p.risk);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : fit.points) {
    const double dx = std::log(p.n) - mx;
    const double dy = std::log(p.risk) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  detail::require(sxx > 0.0, "fit_rate: all points share the same n");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Numeric checkers

struct Lemma2Report {
  bool skipped = false;
  std::string reason;
  std::size_t checked = 0;  // grid values satisfying the antecedent
  std::vector<double> counterexamples;
};

// For a, b, c > 0 with a b e^(c/a) > 4 log2(e), every u >= 1 with
// u >= 2c + 2a ln(ab) must satisfy u > c + a ln(b u).
inline Lemma2Report check_lemma2(double a, double b, double c, const std::vector<double>& u_grid) {
  detail::require(a > 0.0 && b > 0.0 && c > 0.0, "check_lemma2: a, b, c must be positive");
  Lemma2Report report;
  const double lhs = a * b * std::exp(c / a);
  const double rhs = 4.0 * std::numbers::log2e;
  if (!(lhs > rhs)) {
    report.skipped = true;
    report.reason = "hypothesis a*b*exp(c/a)=" + std::to_string(lhs) + " <= 4*log2(e)=" + std::to_string(rhs);
    return report;
  }
  const double threshold = 2.0 * c + 2.0 * a * std::log(a * b);
  for (double u : u_grid) {
    detail::require(u >= 1.0, "check_lemma2: grid values must be >= 1");
    if (u < threshold) continue;
    ++report.checked;
    if (!(u > c + a * std::log(b * u))) report.counterexamples.push_back(u);
  }
  return report;
}

// Planning helper: ceil((1/eps)^((2a + d - a b) / (a (b + 1))) * ln(1 / (eps delta))),
// i.e. the label-complexity order with its hidden constant set to 1.
inline std::size_t label_complexity_gate(double epsilon, double delta, double alpha, double beta,
                                         std::size_t dim) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "label_complexity_gate: epsilon must lie in (0, 1)");
  detail::require(delta > 0.0 && delta < 1.0, "label_complexity_gate: delta must lie in (0, 1)");
  detail::require(alpha > 0.0 && alpha <= 1.0 && beta >= 0.0, "label_complexity_gate: invalid alpha or beta");
  const double d = static_cast<double>(dim);
  detail::require(alpha * beta <= d, "label_complexity_gate: requires alpha * beta <= d");
  const double exponent = (2.0 * alpha + d - alpha * beta) / (alpha * (beta + 1.0));
  const double v = std::pow(1.0 / epsilon, exponent) * std::log(1.0 / (epsilon * delta));
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, v)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(v));
}

}  // namespace kalls
