#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gapmin/boosting.hpp"
#include "gapmin/core.hpp"
#include "gapmin/datagen.hpp"
#include "gapmin/learners.hpp"

namespace gapmin {

// Bad or inconsistent experiment configuration. The message carries the JSON
// field path so the CLI can point at the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What the experiment trains on. Synthetic kinds draw fresh data per seed;
// "csv" reloads the same files and only the split varies.
struct ProblemSpec {
  std::string kind;  // "gaussian_shift" | "friedman" | "csv"

  // gaussian_shift
  int n_source = 200;
  int n_target = 100;
  std::vector<double> shift;
  double flip_prob = 0.0;

  // friedman
  int n_source_each = 300;
  int n_sources = 3;
  double noise_sd = 1.0;

  // csv
  std::string source_path;
  std::string target_path;
  std::string label_column = "y";

  bool synthetic() const { return kind != "csv"; }
  void validate() const;
  TransferProblem materialize(std::uint64_t seed) const;
};

enum class AlgorithmKind {
  gap_boost,
  gap_boost_r,
  adaboost_t,
  adaboost_ts,
  tradaboost,
  transferboost,
  adaboost_r2_t,
  adaboost_r2_ts,
  tradaboost_r2,
};

AlgorithmKind algorithm_from_name(const std::string& name);
const char* algorithm_name(AlgorithmKind kind);
TaskMode algorithm_mode(AlgorithmKind kind);

extern const double kDefaultRhoS;  // log(1/2)

// One algorithm entry. Unset gamma_max resolves to 1/sqrt(n target train) at
// run time; unset loss resolves to logistic or squared by task mode.
struct AlgoSpec {
  AlgorithmKind kind = AlgorithmKind::gap_boost;
  int rounds = 20;
  double rho_s = kDefaultRhoS;
  double rho_t = 0.0;
  std::optional<double> gamma_max;
  bool agreement_bonus = false;
  double lambda = 1.0;
  double epsilon_floor = 1e-10;
  std::optional<LossSpec> loss;

  TaskMode mode() const { return algorithm_mode(kind); }
  std::string hyperparameter_string() const;
};

enum class SweepAxis { RhoS, RhoT, RhoJoint, GammaMax, TargetFraction };

SweepAxis sweep_axis_from_name(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::RhoS;
  std::vector<double> grid;
};

enum class Metric { error_rate, rmse };

const char* metric_name(Metric m);

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<AlgoSpec> algorithms;
  std::vector<double> target_fractions = {0.1};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<Metric> metrics = {Metric::error_rate, Metric::rmse};
  bool standardize = false;
  bool augment_bias = false;
  std::string out = "results";
  std::optional<SweepSpec> sweep_spec;

  void validate() const;
  std::string to_json() const;  // resolved echo, manifest payload
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

// One (algorithm x seed x fraction [x grid point]) evaluation. Everything but
// wall_seconds is reproducible from config + seed.
struct ResultRecord {
  std::string algorithm;
  std::string problem;
  std::uint64_t seed = 0;
  double target_fraction = 0.0;
  std::string axis;  // empty outside sweeps
  double axis_value = 0.0;
  std::string hyperparameters;
  std::string metric;
  double value = 0.0;
  double wall_seconds = 0.0;
};

struct CellAggregate {
  std::string algorithm;
  std::string problem;
  double target_fraction = 0.0;
  std::string axis;
  double axis_value = 0.0;
  std::string metric;
  int count = 0;
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n); 0 when n == 1
};

struct RunOutput {
  std::vector<ResultRecord> records;
  std::vector<CellAggregate> aggregates;
};

// Deterministic target split: one shuffle per seed, train = leading
// max(1, floor(fraction * n)) of the permuted order. Same seed nests the
// train sets of increasing fractions. Throws ConfigError on an empty test set.
std::pair<Sample, Sample> split_target(const Sample& target, double fraction,
                                       std::uint64_t seed);

// Trains one entry on a prepared split; round weights are re-validated and
// violations throw. gamma_max falls back to 1/sqrt(target train size).
BoostResult train_algorithm(const AlgoSpec& algo, const Sample& source,
                            const Sample& target_train);

RunOutput run_experiment(const ExperimentConfig& cfg, int jobs = 1);

// Reruns the whole experiment per grid point, tagging records with the axis.
// Rho and gamma axes override only the gapBoost entries; TargetFraction
// replaces the fraction list.
RunOutput sweep(const ExperimentConfig& cfg, SweepAxis axis,
                const std::vector<double>& grid, int jobs = 1);

std::vector<CellAggregate> aggregate(const std::vector<ResultRecord>& records);

// Parses only the "problem" section of a config document; other top-level
// keys belong to other subcommands and are not checked here.
ProblemSpec problem_from_file(const std::string& path);

// Config surface of the `gap` subcommand: a problem plus the weighting and
// objective of the instance-weighting gap. source_mass < 0 means uniform
// weights over the pooled sample; otherwise the source block shares
// source_mass and the target block 1 - source_mass, each spread uniformly.
struct GapCommandConfig {
  ProblemSpec problem;
  double lambda = 1.0;
  double eta = 0.0;
  double source_mass = -1.0;
  LossSpec loss;

  static GapCommandConfig from_file(const std::string& path);
};

std::string gap_report_json(const GapCommandConfig& cfg, std::uint64_t seed);

void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path);
void write_aggregates_csv(const std::vector<CellAggregate>& aggregates,
                          const std::string& path);
void write_manifest(const ExperimentConfig& cfg, const std::string& path);

}  // namespace gapmin
