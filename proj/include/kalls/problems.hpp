#pragma once

// Synthetic binary classification problems with analytically known
// regression function eta(x) = P(Y = 1 | X = x), plus Monte-Carlo
// verifiers for the smoothness and margin-noise conditions each family
// declares.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kalls/error.hpp"
#include "kalls/geometry.hpp"
#include "kalls/random.hpp"

namespace kalls {

using Label = int;

// |eta(x) - eta(x')| <= L * rho(x, x')^alpha
struct HolderConstants {
  double alpha = 1.0;
  double L = 1.0;
};

// Strong-density constants: lambda(B(x,r) & supp) >= c0 * lambda(B(x,r)) for
// r <= r0, and density >= p_min on the support. Only used by the Hoelder to
// mass-smoothness implication check; the learner never sees them.
struct DensityFloor {
  double p_min = 1.0;
  double c0 = 1.0;
  double r0 = 1.0;
};

struct ProblemSpec {
  std::string name;
  std::size_t dim = 1;
  // Writes one draw from P_X into `out` (size dim).
  std::function<void(Rng&, std::span<double>)> sampler;
  std::function<double(PointView)> eta;
  // Declared mass-smoothness (alpha, L) and margin-noise (beta, C).
  double alpha = 1.0;
  double L = 1.0;
  double beta = 0.0;
  double C = 1.0;
  std::optional<HolderConstants> holder;
  std::optional<DensityFloor> density;
};

inline Label bayes_label(const ProblemSpec& spec, PointView x) {
  return spec.eta(x) >= 0.5 ? 1 : 0;
}

inline Pool sample_pool(const ProblemSpec& spec, std::size_t w, std::uint64_t seed) {
  detail::require(w >= 1, "sample_pool: pool size must be at least 1");
  Rng rng(seed);
  std::vector<double> coords(w * spec.dim);
  for (std::size_t i = 0; i < w; ++i) {
    spec.sampler(rng, std::span<double>(coords.data() + i * spec.dim, spec.dim));
  }
  return Pool(spec.dim, std::move(coords));
}

// Same problem with eta replaced by 1 - eta.
inline ProblemSpec flipped(ProblemSpec spec) {
  auto eta = spec.eta;
  spec.eta = [eta](PointView x) { return 1.0 - eta(x); };
  spec.name += "-flipped";
  return spec;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double unit_ball_volume(std::size_t d) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

namespace families {

inline void uniform_cube(Rng& rng, std::span<double> out) {
  for (auto& c : out) c = rng.uniform();
}

// P_X uniform on [0,1], eta(x) = x.
inline ProblemSpec linear_1d() {
  ProblemSpec s;
  s.name = "linear-1d";
  s.dim = 1;
  s.sampler = uniform_cube;
  s.eta = [](PointView x) { return std::clamp(x[0], 0.0, 1.0); };
  // Ball mass of B°(x,r) in [0,1] is at least min(r,1): alpha = L = 1.
  s.alpha = 1.0;
  s.L = 1.0;
  // P(|x - 1/2| < eps) = 2 eps.
  s.beta = 1.0;
  s.C = 2.0;
  s.holder = HolderConstants{1.0, 1.0};
  s.density = DensityFloor{1.0, 0.5, 1.0};
  return s;
}

// P_X uniform on [0,1]^d, eta(x) = 1/2 + sign(x1 - 1/2) |2 x1 - 1|^kappa / 2.
inline ProblemSpec power_margin(double kappa, std::size_t d = 1) {
  detail::require(kappa > 0.0, "power-margin: kappa must be positive");
  detail::require(d >= 1, "power-margin: d must be positive");
  ProblemSpec s;
  s.name = "power-margin:kappa=" + std::to_string(kappa) + ",d=" + std::to_string(d);
  s.dim = d;
  s.sampler = uniform_cube;
  s.eta = [kappa](PointView x) {
    const double t = std::clamp(2.0 * x[0] - 1.0, -1.0, 1.0);
    const double mag = 0.5 * std::pow(std::abs(t), kappa);
    return t >= 0.0 ? 0.5 + mag : 0.5 - mag;
  };
  // |eta - 1/2| < eps  iff  |2 x1 - 1| < (2 eps)^(1/kappa), mass min(1, 2^(1/kappa) eps^(1/kappa)).
  s.beta = 1.0 / kappa;
  s.C = std::pow(2.0, 1.0 / kappa);
  // eta is Hoelder in x1 with exponent min(kappa,1) and constant max(kappa,1).
  const double holder_alpha = std::min(kappa, 1.0);
  const double holder_L = std::max(kappa, 1.0);
  s.holder = HolderConstants{holder_alpha, holder_L};
  // For r <= 1/2 the ball keeps the orthant pointing at the far faces,
  // so P(B°(x,r)) >= c^d r^d with c^d = 2^-d V_d. For r > 1/2 the mass is
  // at least (c/2)^d while |delta eta| <= 1.
  const double c = std::pow(std::pow(0.5, static_cast<double>(d)) * unit_ball_volume(d),
                            1.0 / static_cast<double>(d));
  s.alpha = holder_alpha;
  s.L = std::max({1.0, holder_L * std::pow(c, -holder_alpha), std::pow(2.0 / c, holder_alpha)});
  s.density = DensityFloor{1.0, std::pow(0.5, static_cast<double>(d)), 0.5};
  return s;
}

// P_X standard normal, eta = Phi. The marginal has unbounded support, so no
// density floor exists; |Phi(x) - Phi(z)| is the mass between x and z, which
// the open ball B°(x, |x - z|) contains.
inline ProblemSpec gaussian_1d() {
  ProblemSpec s;
  s.name = "gaussian-1d";
  s.dim = 1;
  s.sampler = [](Rng& rng, std::span<double> out) { out[0] = rng.normal(); };
  s.eta = [](PointView x) { return standard_normal_cdf(x[0]); };
  s.alpha = 1.0;
  s.L = 1.0;
  // Phi(X) is uniform, so P(|Phi(X) - 1/2| < eps) = 2 eps.
  s.beta = 1.0;
  s.C = 2.0;
  s.holder = HolderConstants{1.0, 1.0 / std::sqrt(2.0 * std::numbers::pi)};
  return s;
}

// eta(x) = 1{x >= 1/2}: noiseless but discontinuous.
inline ProblemSpec step_1d() {
  ProblemSpec s;
  s.name = "step-1d";
  s.dim = 1;
  s.sampler = uniform_cube;
  s.eta = [](PointView x) { return x[0] >= 0.5 ? 1.0 : 0.0; };
  s.alpha = 1.0;
  s.L = 1.0;
  s.beta = 1.0;
  s.C = 1.0;
  s.density = DensityFloor{1.0, 0.5, 1.0};
  return s;
}

inline ProblemSpec constant(double value) {
  detail::require(value >= 0.0 && value <= 1.0, "constant: eta must lie in [0,1]");
  ProblemSpec s;
  s.name = "constant:eta=" + std::to_string(value);
  s.dim = 1;
  s.sampler = uniform_cube;
  s.eta = [value](PointView) { return value; };
  s.alpha = 1.0;
  s.L = 1.0;
  s.beta = 1.0;
  s.C = 1.0;
  s.holder = HolderConstants{1.0, 1.0};
  s.density = DensityFloor{1.0, 0.5, 1.0};
  return s;
}

}  // namespace families

namespace detail {

inline double parse_double(std::string_view key, std::string_view text) {
  std::string buf(text);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  require(!buf.empty() && end == buf.c_str() + buf.size() && std::isfinite(v),
          "invalid value '" + buf + "' for family parameter '" + std::string(key) + "'");
  return v;
}

}  // namespace detail

// Resolves a family name such as "linear-1d", "gaussian-1d",
// "power-margin:kappa=2,d=3", "step-1d" or "constant:eta=1". Any family
// accepts alpha=, L=, beta=, C= overrides of its declared constants.
inline ProblemSpec make_problem(std::string_view name) {
  const auto colon = name.find(':');
  const std::string base(name.substr(0, colon));
  std::map<std::string, double> args;
  if (colon != std::string_view::npos) {
    std::string_view rest = name.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      detail::require(eq != std::string_view::npos && eq > 0,
                      "malformed family parameter '" + std::string(item) + "'");
      const std::string key(item.substr(0, eq));
      args[key] = detail::parse_double(key, item.substr(eq + 1));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  auto take = [&args](const std::string& key) -> std::optional<double> {
    auto it = args.find(key);
    if (it == args.end()) return std::nullopt;
    const double v = it->second;
    args.erase(it);
    return v;
  };

  ProblemSpec spec;
  if (base == "linear-1d") {
    spec = families::linear_1d();
  } else if (base == "gaussian-1d") {
    spec = families::gaussian_1d();
  } else if (base == "step-1d") {
    spec = families::step_1d();
  } else if (base == "power-margin") {
    const double kappa = take("kappa").value_or(1.0);
    const double d = take("d").value_or(1.0);
    detail::require(d >= 1.0 && d == std::floor(d), "power-margin: d must be a positive integer");
    spec = families::power_margin(kappa, static_cast<std::size_t>(d));
  } else if (base == "constant") {
    spec = families::constant(take("eta").value_or(0.5));
  } else {
    throw InvalidInput("unknown problem family '" + base + "'");
  }
  if (auto v = take("alpha")) spec.alpha = *v;
  if (auto v = take("L")) spec.L = *v;
  if (auto v = take("beta")) spec.beta = *v;
  if (auto v = take("C")) spec.C = *v;
  detail::require(args.empty(), "unknown parameter '" + (args.empty() ? "" : args.begin()->first) +
                                    "' for family '" + base + "'");
  spec.name = std::string(name);
  return spec;
}

// ---------------------------------------------------------------------------
// Assumption verifiers

struct AssumptionSample {
  double probe = 0.0;     // eps for the margin check, rho(x,z) for pair checks
  double observed = 0.0;  // empirical mass or |eta(x) - eta(z)|
  double bound = 0.0;     // right-hand side, slack included
  double ratio = 0.0;     // observed / bound
};

struct AssumptionReport {
  std::string assumption_id;  // H1, H3, H4 or T1
  std::size_t tested_points = 0;
  double worst_ratio = 0.0;
  bool passed = true;
  std::vector<AssumptionSample> details;
  std::string note;
};

struct VerifierOptions {
  // Width of the normal-approximation band, in standard errors.
  double z = 3.0;
};

namespace detail {

inline double mc_slack(double p_hat, std::size_t m, double z) {
  return z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(m));
}

inline double safe_ratio(double observed, double bound) {
  if (observed <= 0.0) return 0.0;
  if (bound <= 0.0) return std::numeric_limits<double>::infinity();
  return observed / bound;
}

inline void record(AssumptionReport& report, AssumptionSample s) {
  report.worst_ratio = std::max(report.worst_ratio, s.ratio);
  report.details.push_back(s);
  ++report.tested_points;
}

inline void finish(AssumptionReport& report) { report.passed = report.worst_ratio <= 1.0; }

inline std::vector<double> draw_points(const ProblemSpec& spec, std::size_t m, Rng& rng) {
  std::vector<double> coords(m * spec.dim);
  for (std::size_t i = 0; i < m; ++i)
    spec.sampler(rng, std::span<double>(coords.data() + i * spec.dim, spec.dim));
  return coords;
}

// Checks |eta(x) - eta(z)| <= L * (P(B°(x, rho(x,z))) + slack)^(alpha/d) on
// random pairs, estimating the open-ball mass against one shared reference
// sample.
inline AssumptionReport check_mass_smoothness(const ProblemSpec& spec, std::string id, double alpha,
                                              double L, std::size_t pair_count,
                                              std::size_t mass_sample, std::uint64_t seed,
                                              VerifierOptions opts) {
  require(pair_count >= 1, "smoothness verifier: pair_count must be at least 1");
  require(mass_sample >= 1, "smoothness verifier: mass_sample must be at least 1");
  Rng rng(seed);
  const std::size_t d = spec.dim;
  const Pool reference(d, draw_points(spec, mass_sample, rng));
  const auto pairs = draw_points(spec, 2 * pair_count, rng);
  const double exponent = alpha / static_cast<double>(d);

  AssumptionReport report;
  report.assumption_id = std::move(id);
  for (std::size_t k = 0; k < pair_count; ++k) {
    const PointView x(pairs.data() + 2 * k * d, d);
    const PointView z(pairs.data() + (2 * k + 1) * d, d);
    const double r = distance(x, z);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      if (distance(reference[i], x) < r) ++inside;
    }
    const double mass = static_cast<double>(inside) / static_cast<double>(mass_sample);
    const double upper = std::min(1.0, mass + mc_slack(mass, mass_sample, opts.z));
    const double lhs = std::abs(spec.eta(x) - spec.eta(z));
    const double bound = L * std::pow(upper, exponent);
    record(report, {r, lhs, bound, safe_ratio(lhs, bound)});
  }
  finish(report);
  return report;
}

}  // namespace detail

// Margin noise: P_X(|eta - 1/2| < eps) < C eps^beta for each eps in the grid.
inline AssumptionReport verify_margin_noise(const ProblemSpec& spec, std::size_t sample_size,
                                            const std::vector<double>& eps_grid,
                                            std::uint64_t seed, VerifierOptions opts = {}) {
  detail::require(!eps_grid.empty(), "verify_margin_noise: eps grid is empty");
  detail::require(sample_size >= 1, "verify_margin_noise: sample_size must be at least 1");
  for (double e : eps_grid)
    detail::require(e > 0.0 && e <= 1.0, "verify_margin_noise: eps must lie in (0,1]");
  Rng rng(seed);
  const auto xs = detail::draw_points(spec, sample_size, rng);
  std::vector<double> gaps(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i)
    gaps[i] = std::abs(spec.eta(PointView(xs.data() + i * spec.dim, spec.dim)) - 0.5);

  AssumptionReport report;
  report.assumption_id = "H3";
  for (double eps : eps_grid) {
    const auto hits = std::count_if(gaps.begin(), gaps.end(), [eps](double g) { return g < eps; });
    const double p_hat = static_cast<double>(hits) / static_cast<double>(sample_size);
    const double bound = spec.C * std::pow(eps, spec.beta) + detail::mc_slack(p_hat, sample_size, opts.z);
    detail::record(report, {eps, p_hat, bound, detail::safe_ratio(p_hat, bound)});
  }
  report.tested_points = sample_size;
  detail::finish(report);
  return report;
}

inline AssumptionReport verify_smoothness(const ProblemSpec& spec, std::size_t pair_count,
                                          std::size_t mass_sample, std::uint64_t seed,
                                          VerifierOptions opts = {}) {
  return detail::check_mass_smoothness(spec, "H4", spec.alpha, spec.L, pair_count, mass_sample,
                                       seed, opts);
}

// Hoelder continuity on random pairs; exact, no sampling slack needed.
inline AssumptionReport verify_holder(const ProblemSpec& spec, std::size_t pair_count,
                                      std::uint64_t seed) {
  detail::require(spec.holder.has_value(), "verify_holder: family '" + spec.name +
                                               "' declares no Hoelder constants");
  Rng rng(seed);
  const auto pairs = detail::draw_points(spec, 2 * pair_count, rng);
  const std::size_t d = spec.dim;
  AssumptionReport report;
  report.assumption_id = "H1";
  for (std::size_t k = 0; k < pair_count; ++k) {
    const PointView x(pairs.data() + 2 * k * d, d);
    const PointView z(pairs.data() + (2 * k + 1) * d, d);
    const double r = distance(x, z);
    const double lhs = std::abs(spec.eta(x) - spec.eta(z));
    // Relative tolerance for rounding in eta itself.
    const double bound = spec.holder->L * std::pow(r, spec.holder->alpha) * (1.0 + 1e-12) + 1e-15;
    detail::record(report, {r, lhs, bound, detail::safe_ratio(lhs, bound)});
  }
  detail::finish(report);
  return report;
}

// Mass-smoothness constant implied by Hoelder continuity plus a density
// floor. For r <= r0:
//   P(B°(x,r)) >= p_min c0 V_d r^d, so |delta eta| <= L_h r^a_h
//              <= L_h (p_min c0 V_d)^(-a_h/d) P^(a_h/d).
// For r > r0 the mass is at least p_min c0 V_d r0^d and |delta eta| <= 1.
inline double theorem1_constant(const ProblemSpec& spec) {
  detail::require(spec.holder.has_value(), "family '" + spec.name + "' declares no Hoelder constants");
  detail::require(spec.density.has_value(), "family '" + spec.name + "' has no density lower bound");
  const auto& h = *spec.holder;
  const auto& f = *spec.density;
  const double d = static_cast<double>(spec.dim);
  const double floor_rate = f.p_min * f.c0 * unit_ball_volume(spec.dim);
  const double near = h.L * std::pow(floor_rate, -h.alpha / d);
  const double far = std::pow(floor_rate * std::pow(f.r0, d), -h.alpha / d);
  return std::max(near, far);
}

inline AssumptionReport verify_theorem1(const ProblemSpec& spec, std::size_t pair_count,
                                        std::uint64_t seed, std::size_t mass_sample = 20000,
                                        VerifierOptions opts = {}) {
  const double L = theorem1_constant(spec);
  auto report = detail::check_mass_smoothness(spec, "T1", spec.holder->alpha, L, pair_count,
                                              mass_sample, seed, opts);
  report.note = "implied L=" + std::to_string(L);
  return report;
}

}  // namespace kalls
