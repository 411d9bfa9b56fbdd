#pragma once

// Command-line front end: run, verify and report subcommands. Kept in a
// header so the tests can drive it in-process.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "kalls/experiment.hpp"
#include "kalls/problems.hpp"

namespace kalls::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kVerifyFailed = 2 };

inline constexpr const char* kCsvSchema =
    "Experiment CSV (one row per budget, replication and mode, ordered by budget, replication, mode):\n"
    "  family            problem family name as given\n"
    "  mode              kalls | passive\n"
    "  n                 label budget\n"
    "  seed              replication seed (base seed mixed with budget and replication index)\n"
    "  excess_risk       Monte-Carlo excess risk over test_size fresh draws\n"
    "  std_error         its standard error\n"
    "  margin_agreement  agreement with the Bayes rule where |eta - 1/2| > delta_hat; empty if undefined\n"
    "  active_set_size   entries stored by the learner (n for passive)\n"
    "  retained_size     points in the final classifier\n"
    "  degenerate_flag   1 if the classifier is the empty-set fallback\n"
    "Exit codes: 0 success, 1 usage or config error, 2 verification failure.";

struct VerifyOptions {
  std::string family = "linear-1d";
  std::uint64_t seed = 1;
  std::size_t samples = 100000;  // margin draws and ball-mass reference size
  std::size_t pairs = 1000;
};

inline void print_assumption(std::ostream& os, const AssumptionReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-3s %-4s tested=%zu worst_ratio=%.4f", r.assumption_id.c_str(),
                r.passed ? "pass" : "FAIL", r.tested_points, r.worst_ratio);
  os << buf;
  if (!r.note.empty()) os << ' ' << r.note;
  os << '\n';
}

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out) {
  const ProblemSpec spec = make_problem(opt.family);
  out << "family " << spec.name << " alpha=" << spec.alpha << " L=" << spec.L << " beta=" << spec.beta
      << " C=" << spec.C << " d=" << spec.dim << '\n';
  bool ok = true;
  auto show = [&](const AssumptionReport& r) {
    print_assumption(out, r);
    ok = ok && r.passed;
  };
  if (spec.holder) show(verify_holder(spec, opt.pairs, mix_seed(opt.seed, 1)));
  else out << "H1  skipped (no Hoelder constants declared)\n";
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.025 * i);
  show(verify_margin_noise(spec, opt.samples, grid, mix_seed(opt.seed, 3)));
  show(verify_smoothness(spec, opt.pairs, opt.samples, mix_seed(opt.seed, 4)));
  if (spec.holder && spec.density) show(verify_theorem1(spec, opt.pairs, mix_seed(opt.seed, 5), opt.samples));
  else out << "T1  skipped (no density lower bound)\n";
  return ok ? kOk : kVerifyFailed;
}

inline std::string default_summary_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  const bool traces = !cfg.trace_dir.empty();
  const auto result = run_experiment(cfg, traces);

  if (cfg.out.empty()) {
    write_experiment_csv(out, result.rows);
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    detail::require(static_cast<bool>(f), "cannot write '" + cfg.out + "'");
    write_experiment_csv(f, result.rows);
  }
  std::string summary = cfg.summary;
  if (summary.empty() && !cfg.out.empty()) summary = default_summary_path(cfg.out);
  if (!summary.empty()) {
    std::ofstream f(summary, std::ios::binary);
    detail::require(static_cast<bool>(f), "cannot write '" + summary + "'");
    f << summary_json(cfg, result.rows).dump(2) << '\n';
  }
  if (traces) {
    std::filesystem::create_directories(cfg.trace_dir);
    for (std::size_t j = 0; j < result.rows.size(); ++j) {
      const auto& r = result.rows[j];
      const std::string stem = std::string(to_string(r.mode)) + "_b" + std::to_string(r.budget_index) + "_r" +
                               std::to_string(r.rep);
      const auto dir = std::filesystem::path(cfg.trace_dir);
      std::ofstream t(dir / ("trace_" + stem + ".csv"), std::ios::binary);
      write_trace_csv(t, result.artifacts[j].trace);
      std::ofstream q(dir / ("queries_" + stem + ".csv"), std::ios::binary);
      q << "order,pool_index,label,charged_total\n";
      for (const auto& rec : result.artifacts[j].queries)
        q << rec.order << ',' << rec.pool_index << ',' << rec.label << ',' << rec.charged_total << '\n';
    }
  }
  return kOk;
}

inline int cmd_report(const std::string& path, std::ostream& out) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), "cannot open '" + path + "'");
  print_report(out, build_report(read_experiment_csv(in)));
  return kOk;
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Budgeted nonparametric active learning experiments"};
  app.require_subcommand(1);
  app.footer(kCsvSchema);

  // run: settings are collected as strings and applied over the config file
  // in command-line order, so flags override the file.
  auto* run = app.add_subcommand("run", "Sweep budgets and replications, write CSV and JSON");
  run->footer(kCsvSchema);
  std::string config_path;
  run->add_option("--config", config_path, "flat key = value config file");
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<std::pair<std::string, std::string>> keys = {
      {"family", "problem family, e.g. linear-1d, power-margin:kappa=2, gaussian-1d"},
      {"mode", "kalls | passive | both"},
      {"pool-size", "pool size w, fixed (5000) or per budget (20n)"},
      {"budgets", "comma-separated label budgets"},
      {"epsilon", "target excess risk in (0,1)"},
      {"delta", "confidence in (0,1)"},
      {"reps", "replications per budget"},
      {"seed", "base seed"},
      {"out", "CSV output path (stdout if omitted)"},
      {"summary", "JSON summary path (defaults to the CSV path with .json)"},
      {"trace-dir", "directory for per-run trace and query-log CSVs"},
      {"test-size", "Monte-Carlo test draws per run"},
      {"threads", "worker threads"}};
  std::vector<std::string> values(keys.size());
  std::vector<CLI::Option*> opts;
  for (std::size_t i = 0; i < keys.size(); ++i)
    opts.push_back(run->add_option("--" + keys[i].first, values[i], keys[i].second));
  bool recharge = false;
  auto* recharge_opt = run->add_flag("--recharge-duplicates", recharge, "charge budget for repeated labels");

  auto* verify = app.add_subcommand("verify", "Check a family's declared assumption constants");
  VerifyOptions vopt;
  verify->add_option("--family,family", vopt.family, "problem family")->required();
  verify->add_option("--seed", vopt.seed, "seed");
  verify->add_option("--samples", vopt.samples, "Monte-Carlo sample size");
  verify->add_option("--pairs", vopt.pairs, "random pairs for the smoothness checks");

  auto* report = app.add_subcommand("report", "Fit log-log slopes to an experiment CSV");
  std::string csv_path;
  report->add_option("csv", csv_path, "experiment CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      for (std::size_t i = 0; i < keys.size(); ++i)
        if (opts[i]->count()) apply_setting(cfg, keys[i].first, values[i]);
      if (recharge_opt->count()) cfg.recharge_duplicates = recharge;
      return cmd_run(cfg, out);
    }
    if (*verify) return cmd_verify(vopt, out);
    if (*report) return cmd_report(csv_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace kalls::cli
