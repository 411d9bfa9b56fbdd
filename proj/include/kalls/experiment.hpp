#pragma once

// Seeded budget sweeps comparing the active learner with the passive k_n-NN
// arm, CSV/JSON emission, and the slope report built on top of the CSV.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kalls/baseline.hpp"
#include "kalls/error.hpp"
#include "kalls/eval.hpp"
#include "kalls/kalls.hpp"
#include "kalls/oracle.hpp"
#include "kalls/problems.hpp"

namespace kalls {

enum class Mode { Kalls, Passive, Both };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Kalls: return "kalls";
    case Mode::Passive: return "passive";
    case Mode::Both: return "both";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "kalls") return Mode::Kalls;
  if (s == "passive") return Mode::Passive;
  if (s == "both") return Mode::Both;
  throw InvalidInput("unknown mode '" + std::string(s) + "' (expected kalls, passive or both)");
}

// Pool size either fixed or proportional to the budget ("20n").
struct PoolSize {
  std::size_t value = 0;
  bool per_budget = false;

  std::size_t for_budget(std::size_t n) const { return per_budget ? value * n : value; }

  static PoolSize parse(std::string_view s) {
    PoolSize p;
    std::string text(s);
    if (!text.empty() && text.back() == 'n') {
      p.per_budget = true;
      text.pop_back();
    }
    std::size_t pos = 0;
    try {
      p.value = std::stoul(text, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    detail::require(pos == text.size() && p.value > 0, "invalid pool size '" + std::string(s) + "'");
    return p;
  }

  std::string str() const { return std::to_string(value) + (per_budget ? "n" : ""); }
};

struct ExperimentConfig {
  std::string family = "linear-1d";
  Mode mode = Mode::Both;
  PoolSize pool_size{20, true};
  std::vector<std::size_t> budgets{100};
  double epsilon = 0.2;
  double delta = 0.1;
  std::size_t reps = 1;
  std::uint64_t seed = 1;
  std::string out;        // CSV path, empty for none
  std::string summary;    // JSON path, empty for none
  std::string trace_dir;  // per-run trace and query-log CSVs, empty for none
  bool recharge_duplicates = false;
  std::size_t test_size = 10000;
  std::size_t threads = 1;

  void validate() const {
    (void)make_problem(family);
    detail::require(!budgets.empty(), "config: budget list is empty");
    detail::require(reps >= 1, "config: reps must be at least 1");
    detail::require(test_size >= 1, "config: test_size must be at least 1");
    detail::require(threads >= 1, "config: threads must be at least 1");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "config: epsilon must lie in (0, 1)");
    detail::require(delta > 0.0 && delta < 1.0, "config: delta must lie in (0, 1)");
    for (auto n : budgets)
      detail::require(n <= pool_size.for_budget(n),
                      "config: budget " + std::to_string(n) + " exceeds pool size " +
                          std::to_string(pool_size.for_budget(n)));
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  require(pos == v.size() && !v.empty() && v.front() != '-',
          "config: invalid integer '" + v + "' for '" + key + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) { return parse_double(key, v); }

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: invalid boolean '" + v + "' for '" + key + "'");
}

inline std::vector<std::size_t> parse_budgets(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64("budgets", trim(item)));
  require(!out.empty(), "config: empty budget list");
  return out;
}

}  // namespace detail

// Applies one key/value setting; keys match the long CLI flags with '-'
// replaced by '_'.
inline void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "family") cfg.family = value;
  else if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "pool_size") cfg.pool_size = PoolSize::parse(value);
  else if (key == "budgets") cfg.budgets = detail::parse_budgets(value);
  else if (key == "epsilon") cfg.epsilon = detail::parse_real(key, value);
  else if (key == "delta") cfg.delta = detail::parse_real(key, value);
  else if (key == "reps") cfg.reps = detail::parse_u64(key, value);
  else if (key == "seed") cfg.seed = detail::parse_u64(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "summary") cfg.summary = value;
  else if (key == "trace_dir") cfg.trace_dir = value;
  else if (key == "recharge_duplicates") cfg.recharge_duplicates = detail::parse_bool(key, value);
  else if (key == "test_size") cfg.test_size = detail::parse_u64(key, value);
  else if (key == "threads") cfg.threads = detail::parse_u64(key, value);
  else throw InvalidInput("config: unknown key '" + raw_key + "'");
}

// Flat "key = value" text; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    detail::require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  return parse_config(in, std::move(cfg));
}

// ---------------------------------------------------------------------------
// Sweep

struct ExperimentRow {
  std::string family;
  Mode mode = Mode::Kalls;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double excess_risk = 0.0;
  double std_error = 0.0;
  std::optional<double> margin_agreement;
  std::size_t active_set_size = 0;
  std::size_t retained_size = 0;
  bool degenerate = false;
  std::size_t charged = 0;
  std::size_t pool_size = 0;
  std::size_t budget_index = 0;
  std::size_t rep = 0;
};

// Seed of replication `rep` at budget position `budget_index`; a sweep
// subset reproduces the same rows.
inline std::uint64_t replication_seed(std::uint64_t base, std::size_t budget_index, std::size_t rep) {
  return mix_seed(base, budget_index, rep);
}

namespace seed_stream {
inline constexpr std::uint64_t pool = 1;
inline constexpr std::uint64_t kalls_oracle = 2;
inline constexpr std::uint64_t passive_oracle = 3;
inline constexpr std::uint64_t test = 4;
}  // namespace seed_stream

struct RunArtifacts {
  std::vector<TraceRow> trace;
  std::vector<QueryRecord> queries;
};

namespace detail {

struct Job {
  std::size_t budget_index;
  std::size_t rep;
  Mode mode;
};

inline ExperimentRow run_job(const ExperimentConfig& cfg, const ProblemSpec& spec, const Job& job,
                             RunArtifacts* artifacts) {
  const std::size_t n = cfg.budgets[job.budget_index];
  const std::size_t w = cfg.pool_size.for_budget(n);
  const std::uint64_t seed = replication_seed(cfg.seed, job.budget_index, job.rep);
  const Pool pool = sample_pool(spec, w, mix_seed(seed, seed_stream::pool));
  const std::uint64_t test_seed = mix_seed(seed, seed_stream::test);
  const double dh = delta_hat(cfg.epsilon, spec.C, spec.beta);

  ExperimentRow row;
  row.family = cfg.family;
  row.mode = job.mode;
  row.n = n;
  row.seed = seed;
  row.pool_size = w;
  row.budget_index = job.budget_index;
  row.rep = job.rep;

  auto fill = [&](const NNClassifier& clf) {
    const auto risk = excess_risk(clf, spec, cfg.test_size, test_seed);
    row.excess_risk = risk.mean;
    row.std_error = risk.std_error;
    row.margin_agreement = margin_agreement(clf, spec, dh, cfg.test_size, test_seed);
    row.degenerate = clf.is_degenerate();
  };

  if (job.mode == Mode::Kalls) {
    BudgetedOracle oracle(pool, spec, n, mix_seed(seed, seed_stream::kalls_oracle), cfg.recharge_duplicates);
    auto result = run_kalls(pool, oracle, KallsParams::from_problem(spec, cfg.epsilon, cfg.delta));
    fill(result.classifier);
    row.active_set_size = result.active_set.size();
    row.retained_size = result.retained();
    row.charged = oracle.charged();
    if (artifacts) *artifacts = {std::move(result.trace), oracle.log()};
  } else {
    BudgetedOracle oracle(pool, spec, n, mix_seed(seed, seed_stream::passive_oracle), cfg.recharge_duplicates);
    const PassiveParams pp{spec.alpha, spec.beta, spec.dim, std::nullopt};
    const auto clf = train_passive(pool, oracle, n, pp);
    fill(clf);
    row.active_set_size = n;
    row.retained_size = n;
    row.charged = oracle.charged();
    if (artifacts) {
      artifacts->trace.clear();
      for (const auto& q : oracle.log())
        artifacts->trace.push_back({q.order, Decision::Labeled, 1, static_cast<double>(q.label), NAN,
                                    q.label, q.charged_total});
      artifacts->queries = oracle.log();
    }
  }
  return row;
}

}  // namespace detail

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // canonical order: budget, replication, mode
  std::vector<RunArtifacts> artifacts;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_artifacts = false) {
  cfg.validate();
  const ProblemSpec spec = make_problem(cfg.family);
  KallsParams::from_problem(spec, cfg.epsilon, cfg.delta).validate(spec.dim);

  std::vector<detail::Job> jobs;
  for (std::size_t b = 0; b < cfg.budgets.size(); ++b)
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      if (cfg.mode != Mode::Passive) jobs.push_back({b, r, Mode::Kalls});
      if (cfg.mode != Mode::Kalls) jobs.push_back({b, r, Mode::Passive});
    }

  ExperimentResult result;
  result.rows.resize(jobs.size());
  if (keep_artifacts) result.artifacts.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        result.rows[j] = detail::run_job(cfg, spec, jobs[j], keep_artifacts ? &result.artifacts[j] : nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min(cfg.threads, jobs.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

// ---------------------------------------------------------------------------
// CSV and JSON

inline constexpr std::string_view kExperimentCsvHeader =
    "family,mode,n,seed,excess_risk,std_error,margin_agreement,active_set_size,retained_size,degenerate_flag";

inline void write_experiment_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << kExperimentCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.family << ',' << to_string(r.mode) << ',' << r.n << ',' << r.seed << ','
       << detail::format_real(r.excess_risk) << ',' << detail::format_real(r.std_error) << ',';
    if (r.margin_agreement) os << detail::format_real(*r.margin_agreement);
    os << ',' << r.active_set_size << ',' << r.retained_size << ',' << (r.degenerate ? 1 : 0) << '\n';
  }
}

inline nlohmann::ordered_json summary_json(const ExperimentConfig& cfg, const std::vector<ExperimentRow>& rows) {
  const ProblemSpec spec = make_problem(cfg.family);
  nlohmann::ordered_json j;
  j["params"] = {{"family", cfg.family},
                 {"mode", std::string(to_string(cfg.mode))},
                 {"pool_size", cfg.pool_size.str()},
                 {"budgets", cfg.budgets},
                 {"epsilon", cfg.epsilon},
                 {"delta", cfg.delta},
                 {"delta_hat", delta_hat(cfg.epsilon, spec.C, spec.beta)},
                 {"alpha", spec.alpha},
                 {"L", spec.L},
                 {"beta", spec.beta},
                 {"C", spec.C},
                 {"dim", spec.dim},
                 {"reps", cfg.reps},
                 {"seed", cfg.seed},
                 {"recharge_duplicates", cfg.recharge_duplicates},
                 {"test_size", cfg.test_size}};
  auto runs = nlohmann::ordered_json::array();
  std::size_t degenerate = 0;
  for (const auto& r : rows) {
    degenerate += r.degenerate;
    runs.push_back({{"mode", std::string(to_string(r.mode))},
                    {"n", r.n},
                    {"replication", r.rep},
                    {"seed", r.seed},
                    {"pool_size", r.pool_size},
                    {"charged", r.charged},
                    {"active_set_size", r.active_set_size},
                    {"retained_size", r.retained_size},
                    {"degenerate", r.degenerate}});
  }
  j["runs"] = std::move(runs);
  j["degenerate_runs"] = degenerate;
  return j;
}

// Parses the experiment CSV. Fails on the first malformed row.
inline std::vector<ExperimentRow> read_experiment_csv(std::istream& is) {
  std::string line;
  detail::require(static_cast<bool>(std::getline(is, line)), "CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  detail::require(line == kExperimentCsvHeader, "CSV line 1: unexpected header");
  std::vector<ExperimentRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    const std::string where = "CSV line " + std::to_string(lineno) + ": ";
    detail::require(f.size() == 10, where + "expected 10 fields, got " + std::to_string(f.size()));
    ExperimentRow r;
    try {
      r.family = f[0];
      r.mode = parse_mode(f[1]);
      detail::require(r.mode != Mode::Both, "mode must be kalls or passive");
      r.n = detail::parse_u64("n", f[2]);
      r.seed = detail::parse_u64("seed", f[3]);
      r.excess_risk = detail::parse_real("excess_risk", f[4]);
      r.std_error = detail::parse_real("std_error", f[5]);
      if (!f[6].empty()) r.margin_agreement = detail::parse_real("margin_agreement", f[6]);
      r.active_set_size = detail::parse_u64("active_set_size", f[7]);
      r.retained_size = detail::parse_u64("retained_size", f[8]);
      r.degenerate = detail::parse_bool("degenerate_flag", f[9]);
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
    detail::require(r.n > 0, where + "n must be positive");
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report

struct SlopeRow {
  std::string family;
  Mode mode;
  RateFit fit;
};

struct GapRow {
  std::string family;
  double kalls_slope;
  double passive_slope;
  double gap;  // kalls - passive; negative means the active arm decays faster
};

struct Report {
  std::vector<SlopeRow> slopes;
  std::vector<GapRow> gaps;
};

// Mean excess risk per budget for each (family, mode), then a log-log fit.
inline Report build_report(const std::vector<ExperimentRow>& rows) {
  std::map<std::pair<std::string, int>, std::map<std::size_t, std::pair<double, std::size_t>>> groups;
  for (const auto& r : rows) {
    auto& cell = groups[{r.family, static_cast<int>(r.mode)}][r.n];
    cell.first += r.excess_risk;
    cell.second += 1;
  }
  Report report;
  for (const auto& [key, by_n] : groups) {
    std::vector<RatePoint> pts;
    for (const auto& [n, acc] : by_n)
      pts.push_back({static_cast<double>(n), acc.first / static_cast<double>(acc.second)});
    report.slopes.push_back({key.first, static_cast<Mode>(key.second), fit_rate(pts)});
  }
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_family;
  for (const auto& s : report.slopes) {
    auto& slot = by_family[s.family];
    (s.mode == Mode::Kalls ? slot.first : slot.second) = s.fit.slope;
  }
  for (const auto& [family, slopes] : by_family) {
    if (slopes.first && slopes.second)
      report.gaps.push_back({family, *slopes.first, *slopes.second, *slopes.first - *slopes.second});
  }
  return report;
}

inline void print_report(std::ostream& os, const Report& report) {
  char buf[256];
  os << "family               mode       slope    intercept  r_squared  points\n";
  for (const auto& s : report.slopes) {
    std::snprintf(buf, sizeof buf, "%-20s %-8s %8.3f %10.4f %10.4f  %zu", s.family.c_str(),
                  std::string(to_string(s.mode)).c_str(), s.fit.slope, s.fit.intercept, s.fit.r_squared,
                  s.fit.points.size());
    os << buf << '\n';
    for (const auto& d : s.fit.dropped)
      os << "  warning: dropped n=" << d.n << " (mean excess risk " << d.risk << " is not positive)\n";
  }
  for (const auto& g : report.gaps) {
    std::snprintf(buf, sizeof buf, "%-20s %-8s %8.3f   (kalls %.3f - passive %.3f)", g.family.c_str(), "gap",
                  g.gap, g.kalls_slope, g.passive_slope);
    os << buf << '\n';
  }
}

}  // namespace kalls
