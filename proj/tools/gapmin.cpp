#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gapmin/datagen.hpp"
#include "gapmin/harness.hpp"
#include "gapmin/learners.hpp"
#include "gapmin/verify.hpp"

namespace fs = std::filesystem;
using namespace gapmin;

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int jobs = 1;
};

void print_aggregates(const RunOutput& out) {
  for (const CellAggregate& a : out.aggregates) {
    std::cout << a.algorithm << " fraction=" << a.target_fraction;
    if (!a.axis.empty())
      std::cout << " " << a.axis << "=" << a.axis_value;
    std::cout << " " << a.metric << " = " << a.mean << " +/- " << a.std_error
              << " (n=" << a.count << ")\n";
  }
}

void write_outputs(const ExperimentConfig& cfg, const RunOutput& out) {
  fs::create_directories(cfg.out);
  write_results_csv(out.records, cfg.out + "/results.csv");
  write_aggregates_csv(out.aggregates, cfg.out + "/aggregates.csv");
  write_manifest(cfg, cfg.out + "/manifest.json");
  std::cout << "wrote " << out.records.size() << " records to " << cfg.out
            << "\n";
}

ExperimentConfig load_experiment(const CommonOpts& opts) {
  ExperimentConfig cfg = ExperimentConfig::from_file(opts.config);
  if (opts.seed_given) cfg.seeds = {opts.seed};
  if (!opts.out.empty()) cfg.out = opts.out;
  return cfg;
}

int cmd_generate(const CommonOpts& opts) {
  ProblemSpec problem = problem_from_file(opts.config);
  if (!problem.synthetic())
    throw ConfigError("problem.kind: generate needs a synthetic problem");
  TransferProblem prob = problem.materialize(opts.seed);
  std::string dir = opts.out.empty() ? std::string(".") : opts.out;
  fs::create_directories(dir);
  save_csv(prob.source, dir + "/source.csv");
  save_csv(prob.target, dir + "/target.csv");
  std::cout << "wrote " << prob.source.size() << " source rows and "
            << prob.target.size() << " target rows to " << dir << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  ExperimentConfig cfg = load_experiment(opts);
  RunOutput out = run_experiment(cfg, opts.jobs);
  write_outputs(cfg, out);
  print_aggregates(out);
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  ExperimentConfig cfg = load_experiment(opts);
  if (!cfg.sweep_spec)
    throw ConfigError("sweep: config has no sweep section");
  RunOutput out = sweep(cfg, cfg.sweep_spec->axis, cfg.sweep_spec->grid,
                        opts.jobs);
  write_outputs(cfg, out);
  print_aggregates(out);
  return 0;
}

int cmd_gap(const CommonOpts& opts) {
  GapCommandConfig cfg = GapCommandConfig::from_file(opts.config);
  std::cout << gap_report_json(cfg, opts.seed) << "\n";
  return 0;
}

int cmd_verify(const CommonOpts& opts) {
  bool all_ok = true;
  for (const SuiteReport& report : run_all_suites(opts.seed)) {
    std::cout << report.name << ": " << report.checks << " checks, "
              << report.violations << " violations, worst slack "
              << report.worst_slack << "\n";
    for (const std::string& d : report.deviations)
      std::cout << "  " << d << "\n";
    all_ok = all_ok && report.ok();
  }
  if (!all_ok) {
    std::cerr << "verification failed\n";
    return 3;
  }
  std::cout << "all suites passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gap-minimizing transfer and multitask learning toolkit"};
  app.require_subcommand(1);
  CommonOpts opts;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", opts.seed, "random seed")
        ->each([&](const std::string&) { opts.seed_given = true; });
  };

  CLI::App* gen = app.add_subcommand("generate",
                                     "emit a synthetic problem as CSV files");
  gen->add_option("--config", opts.config, "JSON config with a problem section")
      ->required();
  gen->add_option("--out", opts.out, "output directory");
  add_seed(gen);

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", opts.config, "JSON experiment config")
      ->required();
  run->add_option("--out", opts.out, "output directory (overrides config)");
  run->add_option("--jobs", opts.jobs, "worker threads");
  add_seed(run);

  CLI::App* swp = app.add_subcommand("sweep",
                                     "run the sweep section of a config");
  swp->add_option("--config", opts.config, "JSON experiment config")
      ->required();
  swp->add_option("--out", opts.out, "output directory (overrides config)");
  swp->add_option("--jobs", opts.jobs, "worker threads");
  add_seed(swp);

  CLI::App* gap = app.add_subcommand("gap",
                                     "print the instance-weighting gap report");
  gap->add_option("--config", opts.config,
                  "JSON config with problem and gap sections")
      ->required();
  add_seed(gap);

  CLI::App* verify = app.add_subcommand("verify",
                                        "run the inequality suites");
  add_seed(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(opts);
    if (run->parsed()) return cmd_run(opts);
    if (swp->parsed()) return cmd_sweep(opts);
    if (gap->parsed()) return cmd_gap(opts);
    if (verify->parsed()) return cmd_verify(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
