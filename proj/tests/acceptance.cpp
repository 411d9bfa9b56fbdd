// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance --only 7   a single criterion
//
// Exit status is nonzero if any selected criterion fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kalls/baseline.hpp"
#include "kalls/eval.hpp"
#include "kalls/experiment.hpp"
#include "kalls/kalls.hpp"

using namespace kalls;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

bool same_10_digits(double got, double want) {
  if (want == 0.0) return got == 0.0;
  return std::abs(got - want) <= 5e-10 * std::abs(want);
}

// 1. Budget safety over 1000 randomized runs.
Outcome budget_safety() {
  const std::vector<std::string> names{"linear-1d", "power-margin:kappa=2", "power-margin:kappa=0.5",
                                       "power-margin:kappa=1,d=2", "gaussian-1d", "constant:eta=0.5",
                                       "step-1d"};
  std::vector<ProblemSpec> specs;
  for (const auto& n : names) specs.push_back(make_problem(n));
  Rng rng(20240101);
  std::size_t violations = 0, total_charged = 0;
  for (int run = 0; run < 1000; ++run) {
    const auto& spec = specs[rng.bits() % specs.size()];
    const std::size_t w = 1 + rng.bits() % 1500;
    const std::size_t n = rng.bits() % (w + 200);
    const double eps = rng.uniform(0.05, 0.95);
    const double delta = rng.uniform(0.01, 0.5);
    const auto pool = sample_pool(spec, w, rng.bits());
    BudgetedOracle oracle(pool, spec, n, rng.bits(), rng.bits() % 2 == 0);
    const auto r = run_kalls(pool, oracle, KallsParams::from_problem(spec, eps, delta));
    std::size_t logged = 0;
    for (const auto& q : oracle.log()) logged = std::max(logged, q.charged_total);
    if (oracle.charged() > n || logged > n || (!r.trace.empty() && r.trace.back().charged_total > n)) ++violations;
    total_charged += oracle.charged();
  }
  return {violations == 0, fmt("1000 runs, %zu over budget, %zu labels charged in total", violations, total_charged)};
}

// 2. Byte-identical trace, CSV and JSON on repetition.
Outcome determinism() {
  ExperimentConfig cfg;
  cfg.family = "linear-1d";
  cfg.mode = Mode::Both;
  cfg.pool_size = PoolSize::parse("10n");
  cfg.budgets = {100, 400};
  cfg.reps = 3;
  cfg.test_size = 5000;
  auto render = [](const ExperimentConfig& c) {
    const auto res = run_experiment(c, true);
    std::ostringstream os;
    write_experiment_csv(os, res.rows);
    os << summary_json(c, res.rows).dump(2);
    for (const auto& a : res.artifacts) write_trace_csv(os, a.trace);
    return os.str();
  };
  const auto a = render(cfg);
  const auto b = render(cfg);
  cfg.threads = 4;
  const auto c = render(cfg);
  return {a == b && a == c, fmt("%zu bytes compared across 3 repetitions (1, 1 and 4 threads)", a.size())};
}

// 3. Formula examples, checked against the printed values and against a
// direct evaluation to 10 significant digits.
Outcome formulas() {
  int bad = 0, checked = 0;
  auto real = [&](double got, double direct, double printed, double printed_tol) {
    ++checked;
    if (!same_10_digits(got, direct) || std::abs(got - printed) > printed_tol) ++bad;
  };
  auto exact = [&](std::size_t got, std::size_t want) {
    ++checked;
    if (got != want) ++bad;
  };
  real(delta_hat(0.5, 1, 0), 0.25, 0.25, 0.0);
  real(delta_hat(0.1, 1, 1), std::sqrt(0.05), 0.223606, 1e-6);
  real(delta_hat(0.1, 5, 2), std::cbrt(0.01), 0.21544, 5e-6);
  exact(k_cap(1, 0.5, 0.1), 281);
  exact(k_cap(1, 0.9, 0.4), 48);
  ++checked;
  if (!(k_cap(2, 0.5, 0.1) > k_cap(1, 0.5, 0.1))) ++bad;
  real(tau(4, 1, 4.0 * std::exp(-4.0)), 1.0, 1.0, 1e-12);
  real(tau(400, 1, 0.1), std::sqrt(std::log(40.0) / 400.0), 0.096032, 5e-7);
  real(tau(1600, 1, 0.1), tau(400, 1, 0.1) / 2.0, 0.048016, 5e-7);
  const PassiveParams pp{1.0, 1.0, 1, std::nullopt};
  exact(choose_k_n(1000, pp), 100);
  exact(choose_k_n(2, pp), 1);
  PassiveParams over = pp;
  over.k_override = 5;
  exact(choose_k_n(100, over), 5);
  exact(label_complexity_gate(0.1, 0.1, 1, 1, 1), 47);
  ++checked;
  if (!(label_complexity_gate(0.05, 0.1, 1, 1, 1) > 47)) ++bad;
  // Reliability chain: tau 0.19207, pi 0.20793, m 42.66, threshold 8.87.
  ActiveSetEntry e;
  e.s = 1;
  for (int i = 0; i < 100; ++i) e.queries.emplace_back(0, i < 90 ? 1 : 0);
  const double lg = std::log(40.0);
  const double pi = 0.4 - std::sqrt(lg / 100.0);
  real(e.radius(0.1), std::sqrt(lg / 100.0), 0.19207, 1e-5);
  real(e.confidence_margin(0.1), pi, 0.20793, 1e-5);
  real(lg / (2 * pi * pi) * pi, lg / (2 * pi), 8.87, 5e-3);
  return {bad == 0, fmt("%d of %d examples match", checked - bad, checked)};
}

// 4. Empirical r_p covers at least mass p, exhaustively over small pools.
Outcome lemma3() {
  Rng rng(4);
  std::size_t checks = 0, bad = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t w = 1 + rng.bits() % 50;
    const std::size_t d = 1 + rng.bits() % 3;
    std::vector<double> c(w * d);
    for (auto& v : c) v = inst % 2 ? rng.normal() : std::floor(rng.uniform() * 4.0);
    const Pool pool(d, c);
    for (std::size_t i = 0; i < w; ++i) {
      for (int g = 1; g <= 100; ++g) {
        const double p = g / 100.0;
        const double r = empirical_r_p(pool, pool[i], p);
        ++checks;
        if (static_cast<double>(count_within(pool, pool[i], r)) / static_cast<double>(w) < p) ++bad;
      }
    }
  }
  return {bad == 0, fmt("%zu (instance, x, p) checks, %zu below p", checks, bad)};
}

// 5. Lemma 2 over the full grid.
Outcome lemma2() {
  std::vector<double> grid;
  for (int i = 0; i <= 9990; ++i) grid.push_back(1.0 + 0.1 * i);
  const double vals[] = {0.5, 1, 2, 5, 10};
  std::size_t counter = 0, checked = 0, skipped = 0;
  for (double a : vals)
    for (double b : vals)
      for (double c : vals) {
        const auto r = check_lemma2(a, b, c, grid);
        if (r.skipped) {
          ++skipped;
          continue;
        }
        checked += r.checked;
        counter += r.counterexamples.size();
      }
  return {counter == 0, fmt("%zu grid points checked, %zu counterexamples, %zu of 125 triples skipped by hypothesis",
                            checked, counter, skipped)};
}

// 6. Assumption verifiers at sample size 1e5 with 3 sigma slack.
Outcome verifiers() {
  std::string detail;
  bool ok = true;
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.025 * i);
  for (const char* name : {"linear-1d", "power-margin:kappa=2", "power-margin:kappa=0.5"}) {
    const auto spec = make_problem(name);
    const auto h3 = verify_margin_noise(spec, 100000, grid, 61);
    const auto h4 = verify_smoothness(spec, 500, 100000, 62);
    ok = ok && h3.passed && h4.passed;
    detail += fmt("%s H3 %s H4 %s; ", name, h3.passed ? "pass" : "fail", h4.passed ? "pass" : "fail");
  }
  const auto wrong = verify_margin_noise(make_problem("power-margin:kappa=2,beta=5"), 100000, grid, 63);
  ok = ok && !wrong.passed;
  detail += fmt("wrong-beta fixture H3 %s (worst ratio %.3g)", wrong.passed ? "pass" : "fail", wrong.worst_ratio);
  return {ok, detail};
}

// 7. Margin agreement on LINEAR-1D.
Outcome margin() {
  const auto spec = families::linear_1d();
  const auto params = KallsParams::from_problem(spec, 0.2, 0.1);
  const int runs = 50;
  int full = 0, degenerate = 0;
  double entries = 0;
  for (int s = 0; s < runs; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto pool = sample_pool(spec, 5000, mix_seed(seed, seed_stream::pool));
    BudgetedOracle oracle(pool, spec, 1000, mix_seed(seed, seed_stream::kalls_oracle));
    const auto r = run_kalls(pool, oracle, params);
    const auto ma = margin_agreement(r.classifier, spec, r.delta_hat, 10000, mix_seed(seed, seed_stream::test));
    full += ma && *ma == 1.0;
    degenerate += r.degenerate();
    entries += static_cast<double>(r.active_set.size());
  }
  const double frac = static_cast<double>(full) / runs;
  const double floor = 0.9 - 3.0 * std::sqrt(0.9 * 0.1 / runs);
  return {frac >= floor, fmt("%d/%d runs with agreement 1.0 (%.2f; need >= %.3f, i.e. 0.9 less 3 sigma); "
                             "%d degenerate, %.2f entries per run",
                             full, runs, frac, floor, degenerate, entries / runs)};
}

// 8. Slopes of the active and passive arms on LINEAR-1D.
Outcome rates() {
  ExperimentConfig cfg;
  cfg.family = "linear-1d";
  cfg.mode = Mode::Both;
  cfg.pool_size = PoolSize::parse("20n");
  cfg.budgets = {250, 500, 1000, 2000, 4000};
  cfg.reps = 20;
  cfg.epsilon = 0.2;
  cfg.delta = 0.1;
  cfg.test_size = 10000;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto report = build_report(run_experiment(cfg).rows);
  double ks = NAN, ps = NAN;
  std::string means;
  for (const auto& s : report.slopes) {
    (s.mode == Mode::Kalls ? ks : ps) = s.fit.slope;
    means += std::string(to_string(s.mode)) + " [";
    for (const auto& p : s.fit.points) means += fmt(" %.4g", p.risk);
    for (const auto& p : s.fit.dropped) means += fmt(" (n=%g dropped)", p.n);
    means += " ] ";
  }
  const bool ok = ks <= -0.75 && ps >= -0.85 && ps <= -0.5 && ks <= ps - 0.15;
  return {ok, fmt("kalls slope %.3f (need <= -0.75), passive slope %.3f (need in [-0.85, -0.5]), gap %.3f "
                  "(need <= -0.15); mean risks ",
                  ks, ps, ks - ps) + means};
}

// 9. Monte-Carlo excess risk against closed forms.
Outcome risk_oracle() {
  const auto spec = families::linear_1d();
  auto bayes = [](PointView x) { return x[0] >= 0.5 ? 1 : 0; };
  auto one = [](PointView) { return 1; };
  auto anti = [](PointView x) { return x[0] >= 0.5 ? 0 : 1; };
  const auto b = excess_risk(bayes, spec, 100000, 91);
  const auto c = excess_risk(one, spec, 100000, 92);
  const auto a = excess_risk(anti, spec, 100000, 93);
  const bool ok = b.mean == 0.0 && std::abs(c.mean - 0.25) <= 3 * c.std_error &&
                  std::abs(a.mean - 0.5) <= 3 * a.std_error;
  return {ok, fmt("bayes %.5f, constant-1 %.5f +- %.5f, anti-bayes %.5f +- %.5f", b.mean, c.mean, c.std_error,
                  a.mean, a.std_error)};
}

// 10. Degenerate paths produce flagged outputs without crashing.
Outcome degenerate_paths() {
  std::string detail;
  bool ok = true;
  auto csv_flag = [](const NNClassifier& clf, const ProblemSpec& spec) {
    ExperimentRow row;
    row.family = spec.name;
    row.n = 1;
    row.degenerate = clf.is_degenerate();
    std::ostringstream os;
    write_experiment_csv(os, {row});
    return os.str().back() == '\n' && os.str()[os.str().size() - 2] == '1';
  };
  try {
    const auto spec = families::linear_1d();
    {
      const auto pool = sample_pool(spec, 100, 1);
      BudgetedOracle o(pool, spec, 0, 2);
      const auto r = run_kalls(pool, o, KallsParams::from_problem(spec, 0.2, 0.1));
      const bool c = r.degenerate() && r.active_set.empty() && o.charged() == 0 && csv_flag(r.classifier, spec);
      ok = ok && c;
      detail += fmt("n=0 %s; ", c ? "flagged" : "NOT flagged");
    }
    {
      const auto pool = sample_pool(spec, 1, 3);
      BudgetedOracle o(pool, spec, 10, 4);
      const auto r = run_kalls(pool, o, KallsParams::from_problem(spec, 0.2, 0.1));
      const bool c = r.degenerate() && r.active_set.size() == 1 && csv_flag(r.classifier, spec);
      ok = ok && c;
      detail += fmt("w=1 %s; ", c ? "flagged" : "NOT flagged");
    }
    {
      const auto coin = families::constant(0.5);
      const auto pool = sample_pool(coin, 400, 5);
      BudgetedOracle o(pool, coin, 100, 6);
      const auto r = run_kalls(pool, o, KallsParams::from_problem(coin, 0.2, 0.1));
      const bool c = r.degenerate() && !r.active_set.empty() && csv_flag(r.classifier, coin);
      ok = ok && c;
      detail += fmt("all entries filtered (%zu stored) %s; ", r.active_set.size(), c ? "flagged" : "NOT flagged");
    }
    {
      const auto pool = sample_pool(spec, 2000, 7);
      BudgetedOracle o(pool, spec, 40, 8);
      const auto p = KallsParams::from_problem(spec, 0.2, 0.1);
      const auto r = run_kalls(pool, o, p);
      const auto& last = r.active_set.back();
      const std::size_t cap = k_cap(last.s, r.delta_hat, p.delta);
      const bool truncated = !last.stopped_early && last.queries.size() < cap;
      const bool c = truncated && o.charged() == 40 && r.trace.back().decision != Decision::Skipped;
      ok = ok && c;
      detail += fmt("budget exhausted inside confident_label (|Q|=%zu < cap %zu, trace ends '%s') %s",
                    last.queries.size(), cap, std::string(to_string(r.trace.back().decision)).c_str(),
                    c ? "flagged" : "NOT flagged");
    }
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what()};
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 1;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"budget safety", budget_safety},
      {"determinism", determinism},
      {"formula examples", formulas},
      {"empirical r_p mass", lemma3},
      {"log-inequality grid", lemma2},
      {"assumption verifiers", verifiers},
      {"margin agreement", margin},
      {"rate separation", rates},
      {"excess-risk oracle", risk_oracle},
      {"degenerate paths", degenerate_paths},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only != 0 && only != id) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
