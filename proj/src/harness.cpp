#include "gapmin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "nlohmann/json.hpp"

#include "gapmin/gap.hpp"
#include "gapmin/random.hpp"

namespace gapmin {

using njson = nlohmann::json;

const double kDefaultRhoS = -0.6931471805599453;  // log(1/2)

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

// shortest round-trip decimal form
std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---- json helpers, all errors carry the field path ----

void need_object(const njson& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const njson& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

double as_number(const njson& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool as_bool(const njson& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const njson& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const njson& member(const njson& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing required key");
  return *it;
}

std::vector<double> as_number_array(const njson& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

LossKind loss_kind_from_name(const std::string& name, const std::string& path) {
  if (name == "squared") return LossKind::squared;
  if (name == "absolute") return LossKind::absolute;
  if (name == "logistic") return LossKind::logistic;
  if (name == "hinge") return LossKind::hinge;
  if (name == "lq") return LossKind::lq;
  fail(path, "unknown loss \"" + name +
                 "\" (squared, absolute, logistic, hinge, lq)");
}

// What train_weighted can actually minimize.
bool trainable(const LossSpec& loss) {
  switch (loss.kind) {
    case LossKind::squared:
    case LossKind::logistic:
    case LossKind::hinge:
      return true;
    case LossKind::lq:
      return loss.q >= 2.0;
    case LossKind::absolute:
      return false;
  }
  return false;
}

LossSpec default_loss(TaskMode mode) {
  LossSpec loss;
  loss.kind =
      mode == TaskMode::classification ? LossKind::logistic : LossKind::squared;
  return loss;
}

struct AlgorithmEntry {
  const char* name;
  AlgorithmKind kind;
  TaskMode mode;
};

constexpr AlgorithmEntry kAlgorithms[] = {
    {"gapBoost", AlgorithmKind::gap_boost, TaskMode::classification},
    {"gapBoostR", AlgorithmKind::gap_boost_r, TaskMode::regression},
    {"AdaBoostT", AlgorithmKind::adaboost_t, TaskMode::classification},
    {"AdaBoostTS", AlgorithmKind::adaboost_ts, TaskMode::classification},
    {"TrAdaBoost", AlgorithmKind::tradaboost, TaskMode::classification},
    {"TransferBoost", AlgorithmKind::transferboost, TaskMode::classification},
    {"AdaBoostR2T", AlgorithmKind::adaboost_r2_t, TaskMode::regression},
    {"AdaBoostR2TS", AlgorithmKind::adaboost_r2_ts, TaskMode::regression},
    {"TrAdaBoostR2", AlgorithmKind::tradaboost_r2, TaskMode::regression},
};

bool is_gap_family(AlgorithmKind kind) {
  return kind == AlgorithmKind::gap_boost || kind == AlgorithmKind::gap_boost_r;
}

BaselineKind to_baseline(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::adaboost_t:
      return BaselineKind::adaboost_t;
    case AlgorithmKind::adaboost_ts:
      return BaselineKind::adaboost_ts;
    case AlgorithmKind::tradaboost:
      return BaselineKind::tradaboost;
    case AlgorithmKind::transferboost:
      return BaselineKind::transferboost;
    case AlgorithmKind::adaboost_r2_t:
      return BaselineKind::adaboost_r2_t;
    case AlgorithmKind::adaboost_r2_ts:
      return BaselineKind::adaboost_r2_ts;
    case AlgorithmKind::tradaboost_r2:
      return BaselineKind::tradaboost_r2;
    default:
      throw std::logic_error("to_baseline: not a baseline kind");
  }
}

BoostConfig resolve_config(const AlgoSpec& algo, std::size_t n_target_train) {
  BoostConfig cfg;
  cfg.rounds = algo.rounds;
  cfg.mode = algo.mode();
  cfg.base.loss = algo.loss ? *algo.loss : default_loss(cfg.mode);
  cfg.base.lambda = algo.lambda;
  cfg.epsilon_floor = algo.epsilon_floor;
  if (is_gap_family(algo.kind)) {
    cfg.rho_s = algo.rho_s;
    cfg.rho_t = algo.rho_t;
    cfg.agreement_bonus = algo.agreement_bonus;
    cfg.gamma_max =
        algo.gamma_max
            ? *algo.gamma_max
            : 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(
                         1, n_target_train)));
  } else {
    cfg.gamma_max = 1.0;  // inert for the baselines
  }
  cfg.validate();
  return cfg;
}

// Re-checks the distributions the booster reported.
void check_trace(const BoostTrace& trace) {
  for (const RoundRecord& r : trace.rounds)
    if (!r.weights.is_normalized(1e-9))
      throw InvariantViolation("boosting round " + std::to_string(r.k) +
                               ": weights do not sum to 1");
  if (trace.final_weights.size() > 0 &&
      !trace.final_weights.is_normalized(1e-9))
    throw InvariantViolation("boosting: final weights do not sum to 1");
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        failed.store(true, std::memory_order_relaxed);
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct Cell {
  AlgoSpec algo;
  std::uint64_t seed = 0;
  double fraction = 0.0;
  std::string axis;
  double axis_value = 0.0;
};

std::vector<ResultRecord> execute_cells(const ExperimentConfig& cfg,
                                        const std::vector<Cell>& cells,
                                        int jobs) {
  bool want_error = false, want_rmse = false;
  for (Metric m : cfg.metrics) {
    want_error |= m == Metric::error_rate;
    want_rmse |= m == Metric::rmse;
  }
  std::vector<std::vector<ResultRecord>> slots(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t idx) {
    const Cell& cell = cells[idx];
    TransferProblem prob = cfg.problem.materialize(cell.seed);
    auto [train, test] = split_target(prob.target, cell.fraction, cell.seed);
    Sample source = prob.source;
    if (cfg.standardize) {
      Standardizer z =
          Standardizer::fit(concat(train, source, DomainTag::target()));
      source = z.transform(source);
      train = z.transform(train);
      test = z.transform(test);
    }
    if (cfg.augment_bias) {
      source = augment_constant(source);
      train = augment_constant(train);
      test = augment_constant(test);
    }
    auto t0 = std::chrono::steady_clock::now();
    BoostResult res = train_algorithm(cell.algo, source, train);
    bool classify = cell.algo.mode() == TaskMode::classification;
    double value = classify ? res.ensemble.error_rate(test)
                            : res.ensemble.rmse(test);
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (classify ? want_error : want_rmse) {
      ResultRecord rec;
      rec.algorithm = algorithm_name(cell.algo.kind);
      rec.problem = cfg.problem.kind;
      rec.seed = cell.seed;
      rec.target_fraction = cell.fraction;
      rec.axis = cell.axis;
      rec.axis_value = cell.axis_value;
      rec.hyperparameters = cell.algo.hyperparameter_string();
      rec.metric = classify ? "error_rate" : "rmse";
      rec.value = value;
      rec.wall_seconds = wall;
      slots[idx].push_back(std::move(rec));
    }
  });
  std::vector<ResultRecord> records;
  for (auto& slot : slots)
    for (auto& rec : slot) records.push_back(std::move(rec));
  return records;
}

bool record_less(const ResultRecord& a, const ResultRecord& b) {
  return std::tie(a.algorithm, a.problem, a.axis, a.axis_value,
                  a.target_fraction, a.metric, a.seed) <
         std::tie(b.algorithm, b.problem, b.axis, b.axis_value,
                  b.target_fraction, b.metric, b.seed);
}

RunOutput finish(std::vector<ResultRecord> records) {
  std::sort(records.begin(), records.end(), record_less);
  RunOutput out;
  out.aggregates = aggregate(records);
  out.records = std::move(records);
  return out;
}

void apply_axis(AlgoSpec& algo, SweepAxis axis, double value) {
  if (!is_gap_family(algo.kind)) return;
  switch (axis) {
    case SweepAxis::RhoS:
      algo.rho_s = value;
      break;
    case SweepAxis::RhoT:
      algo.rho_t = value;
      break;
    case SweepAxis::RhoJoint:
      algo.rho_s = value;
      algo.rho_t = value;
      break;
    case SweepAxis::GammaMax:
      algo.gamma_max = value;
      break;
    case SweepAxis::TargetFraction:
      break;
  }
}

njson loss_to_json(const LossSpec& loss) {
  njson j;
  j["kind"] = loss.kind_name();
  if (loss.kind == LossKind::lq) j["q"] = loss.q;
  return j;
}

ProblemSpec parse_problem(const njson& pj) {
  need_object(pj, "problem");
  ProblemSpec spec;
  spec.kind = as_string(member(pj, "kind", "problem"), "problem.kind");
  if (spec.kind == "gaussian_shift") {
    check_keys(pj, "problem",
               {"kind", "n_source", "n_target", "shift", "flip_prob"});
    if (auto it = pj.find("n_source"); it != pj.end())
      spec.n_source = as_int(*it, "problem.n_source");
    if (auto it = pj.find("n_target"); it != pj.end())
      spec.n_target = as_int(*it, "problem.n_target");
    if (auto it = pj.find("shift"); it != pj.end())
      spec.shift = as_number_array(*it, "problem.shift");
    if (auto it = pj.find("flip_prob"); it != pj.end())
      spec.flip_prob = as_number(*it, "problem.flip_prob");
  } else if (spec.kind == "friedman") {
    check_keys(pj, "problem",
               {"kind", "n_source_each", "n_sources", "n_target", "noise_sd"});
    if (auto it = pj.find("n_source_each"); it != pj.end())
      spec.n_source_each = as_int(*it, "problem.n_source_each");
    if (auto it = pj.find("n_sources"); it != pj.end())
      spec.n_sources = as_int(*it, "problem.n_sources");
    if (auto it = pj.find("n_target"); it != pj.end())
      spec.n_target = as_int(*it, "problem.n_target");
    if (auto it = pj.find("noise_sd"); it != pj.end())
      spec.noise_sd = as_number(*it, "problem.noise_sd");
  } else if (spec.kind == "csv") {
    check_keys(pj, "problem",
               {"kind", "source_path", "target_path", "label_column"});
    if (auto it = pj.find("source_path"); it != pj.end())
      spec.source_path = as_string(*it, "problem.source_path");
    if (auto it = pj.find("target_path"); it != pj.end())
      spec.target_path = as_string(*it, "problem.target_path");
    if (auto it = pj.find("label_column"); it != pj.end())
      spec.label_column = as_string(*it, "problem.label_column");
  } else {
    fail("problem.kind", "unknown kind \"" + spec.kind +
                             "\" (gaussian_shift, friedman, csv)");
  }
  spec.validate();
  return spec;
}

njson parse_document(const std::string& text) {
  try {
    return njson::parse(text);
  } catch (const njson::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

// ---- registry lookups ----

AlgorithmKind algorithm_from_name(const std::string& name) {
  for (const auto& e : kAlgorithms)
    if (name == e.name) return e.kind;
  std::string known;
  for (const auto& e : kAlgorithms) {
    if (!known.empty()) known += ", ";
    known += e.name;
  }
  throw ConfigError("unknown algorithm \"" + name + "\" (known: " + known +
                    ")");
}

const char* algorithm_name(AlgorithmKind kind) {
  for (const auto& e : kAlgorithms)
    if (kind == e.kind) return e.name;
  return "?";
}

TaskMode algorithm_mode(AlgorithmKind kind) {
  for (const auto& e : kAlgorithms)
    if (kind == e.kind) return e.mode;
  return TaskMode::classification;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "rho_s") return SweepAxis::RhoS;
  if (name == "rho_t") return SweepAxis::RhoT;
  if (name == "rho_joint") return SweepAxis::RhoJoint;
  if (name == "gamma_max") return SweepAxis::GammaMax;
  if (name == "target_fraction") return SweepAxis::TargetFraction;
  throw ConfigError("sweep.axis: unknown axis \"" + name +
                    "\" (rho_s, rho_t, rho_joint, gamma_max, target_fraction)");
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::RhoS:
      return "rho_s";
    case SweepAxis::RhoT:
      return "rho_t";
    case SweepAxis::RhoJoint:
      return "rho_joint";
    case SweepAxis::GammaMax:
      return "gamma_max";
    case SweepAxis::TargetFraction:
      return "target_fraction";
  }
  return "?";
}

const char* metric_name(Metric m) {
  return m == Metric::error_rate ? "error_rate" : "rmse";
}

// ---- problem spec ----

void ProblemSpec::validate() const {
  if (kind == "gaussian_shift") {
    if (n_source < 0) fail("problem.n_source", "must be >= 0");
    if (n_target < 1) fail("problem.n_target", "must be >= 1");
    if (shift.empty()) fail("problem.shift", "must list at least 1 coordinate");
    if (!(flip_prob >= 0.0 && flip_prob < 0.5))
      fail("problem.flip_prob", "must be in [0, 0.5)");
  } else if (kind == "friedman") {
    if (n_sources < 0) fail("problem.n_sources", "must be >= 0");
    if (n_sources > 0 && n_source_each < 1)
      fail("problem.n_source_each", "must be >= 1");
    if (n_target < 1) fail("problem.n_target", "must be >= 1");
    if (!(noise_sd >= 0.0)) fail("problem.noise_sd", "must be >= 0");
  } else if (kind == "csv") {
    if (source_path.empty()) fail("problem.source_path", "must be set");
    if (target_path.empty()) fail("problem.target_path", "must be set");
    if (label_column.empty()) fail("problem.label_column", "must be set");
  } else {
    fail("problem.kind",
         "unknown kind \"" + kind + "\" (gaussian_shift, friedman, csv)");
  }
}

TransferProblem ProblemSpec::materialize(std::uint64_t seed) const {
  if (kind == "gaussian_shift")
    return gaussian_shift_classification(n_source, n_target, shift, flip_prob,
                                         seed);
  if (kind == "friedman")
    return friedman_transfer(n_source_each, n_target, n_sources, seed,
                             noise_sd);
  if (kind == "csv") {
    Sample source = [&] {
      try {
        return load_csv(source_path, label_column, DomainTag::source());
      } catch (const std::exception& e) {
        fail("problem.source_path", e.what());
      }
    }();
    Sample target = [&] {
      try {
        return load_csv(target_path, label_column, DomainTag::target());
      } catch (const std::exception& e) {
        fail("problem.target_path", e.what());
      }
    }();
    if (source.dim() != target.dim())
      fail("problem", "source has " + std::to_string(source.dim()) +
                          " features but target has " +
                          std::to_string(target.dim()));
    return {std::move(source), std::move(target)};
  }
  fail("problem.kind", "unknown kind \"" + kind + "\"");
}

// ---- algorithm spec ----

std::string AlgoSpec::hyperparameter_string() const {
  LossSpec resolved = loss ? *loss : default_loss(mode());
  std::string s = "rounds=" + std::to_string(rounds) +
                  ";lambda=" + fmt(lambda) + ";loss=" + resolved.kind_name();
  if (resolved.kind == LossKind::lq) s += ";q=" + fmt(resolved.q);
  if (is_gap_family(kind)) {
    s += ";rho_s=" + fmt(rho_s) + ";rho_t=" + fmt(rho_t) + ";gamma_max=" +
         (gamma_max ? fmt(*gamma_max) : std::string("auto"));
    if (agreement_bonus) s += ";agreement_bonus=1";
  }
  return s;
}

// ---- experiment config ----

void ExperimentConfig::validate() const {
  problem.validate();
  if (algorithms.empty()) fail("algorithms", "must list at least 1 algorithm");
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    const std::string path = "algorithms[" + std::to_string(i) + "]";
    const AlgoSpec& a = algorithms[i];
    LossSpec resolved = a.loss ? *a.loss : default_loss(a.mode());
    if (!trainable(resolved))
      fail(path + ".loss", resolved.kind_name() +
                               " loss is not supported as a base learner");
    AlgoSpec probe = a;
    if (!probe.gamma_max) probe.gamma_max = 0.5;  // stand-in for the auto value
    try {
      resolve_config(probe, 1);
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }
  if (target_fractions.empty())
    fail("target_fractions", "must list at least 1 fraction");
  for (std::size_t i = 0; i < target_fractions.size(); ++i)
    if (!(target_fractions[i] > 0.0 && target_fractions[i] <= 1.0))
      fail("target_fractions[" + std::to_string(i) + "]",
           "must be in (0, 1]");
  if (seeds.empty()) fail("seeds", "must list at least 1 seed");
  if (metrics.empty()) fail("metrics", "must list at least 1 metric");
  if (sweep_spec && sweep_spec->grid.empty())
    fail("sweep.grid", "must list at least 1 value");
}

std::string ExperimentConfig::to_json() const {
  njson j;
  njson p;
  p["kind"] = problem.kind;
  if (problem.kind == "gaussian_shift") {
    p["n_source"] = problem.n_source;
    p["n_target"] = problem.n_target;
    p["shift"] = problem.shift;
    p["flip_prob"] = problem.flip_prob;
  } else if (problem.kind == "friedman") {
    p["n_source_each"] = problem.n_source_each;
    p["n_sources"] = problem.n_sources;
    p["n_target"] = problem.n_target;
    p["noise_sd"] = problem.noise_sd;
  } else {
    p["source_path"] = problem.source_path;
    p["target_path"] = problem.target_path;
    p["label_column"] = problem.label_column;
  }
  j["problem"] = p;
  njson algos = njson::array();
  for (const AlgoSpec& a : algorithms) {
    njson e;
    e["name"] = algorithm_name(a.kind);
    e["rounds"] = a.rounds;
    e["lambda"] = a.lambda;
    e["epsilon_floor"] = a.epsilon_floor;
    e["loss"] = loss_to_json(a.loss ? *a.loss : default_loss(a.mode()));
    if (is_gap_family(a.kind)) {
      e["rho_s"] = a.rho_s;
      e["rho_t"] = a.rho_t;
      if (a.gamma_max)
        e["gamma_max"] = *a.gamma_max;
      else
        e["gamma_max"] = "auto";
      if (a.kind == AlgorithmKind::gap_boost)
        e["agreement_bonus"] = a.agreement_bonus;
    }
    algos.push_back(e);
  }
  j["algorithms"] = algos;
  j["target_fractions"] = target_fractions;
  j["seeds"] = seeds;
  njson ms = njson::array();
  for (Metric m : metrics) ms.push_back(metric_name(m));
  j["metrics"] = ms;
  j["standardize"] = standardize;
  j["augment_bias"] = augment_bias;
  j["out"] = out;
  if (sweep_spec) {
    njson s;
    s["axis"] = sweep_axis_name(sweep_spec->axis);
    s["grid"] = sweep_spec->grid;
    j["sweep"] = s;
  }
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  njson j = parse_document(text);
  need_object(j, "config");
  check_keys(j, "config",
             {"problem", "algorithms", "target_fractions", "seeds", "metrics",
              "standardize", "augment_bias", "out", "sweep"});
  ExperimentConfig cfg;
  cfg.problem = parse_problem(member(j, "problem", "config"));

  const njson& aj = member(j, "algorithms", "config");
  if (!aj.is_array()) fail("algorithms", "expected an array");
  cfg.algorithms.clear();
  for (std::size_t i = 0; i < aj.size(); ++i) {
    const std::string path = "algorithms[" + std::to_string(i) + "]";
    const njson& e = aj[i];
    need_object(e, path);
    AlgoSpec a;
    std::string name = as_string(member(e, "name", path), path + ".name");
    try {
      a.kind = algorithm_from_name(name);
    } catch (const ConfigError& err) {
      fail(path + ".name", err.what());
    }
    if (a.kind == AlgorithmKind::gap_boost) {
      check_keys(e, path,
                 {"name", "rounds", "lambda", "epsilon_floor", "loss", "q",
                  "rho_s", "rho_t", "gamma_max", "agreement_bonus"});
    } else if (a.kind == AlgorithmKind::gap_boost_r) {
      check_keys(e, path,
                 {"name", "rounds", "lambda", "epsilon_floor", "loss", "q",
                  "rho_s", "rho_t", "gamma_max"});
    } else {
      check_keys(e, path,
                 {"name", "rounds", "lambda", "epsilon_floor", "loss", "q"});
    }
    if (auto it = e.find("rounds"); it != e.end())
      a.rounds = as_int(*it, path + ".rounds");
    if (auto it = e.find("lambda"); it != e.end())
      a.lambda = as_number(*it, path + ".lambda");
    if (auto it = e.find("epsilon_floor"); it != e.end())
      a.epsilon_floor = as_number(*it, path + ".epsilon_floor");
    if (auto it = e.find("loss"); it != e.end()) {
      LossSpec loss;
      loss.kind =
          loss_kind_from_name(as_string(*it, path + ".loss"), path + ".loss");
      if (auto qt = e.find("q"); qt != e.end()) {
        if (loss.kind != LossKind::lq)
          fail(path + ".q", "only meaningful with the lq loss");
        loss.q = as_number(*qt, path + ".q");
      }
      try {
        loss.validate();
      } catch (const std::invalid_argument& err) {
        fail(path + ".loss", err.what());
      }
      a.loss = loss;
    } else if (e.find("q") != e.end()) {
      fail(path + ".q", "only meaningful with the lq loss");
    }
    if (auto it = e.find("rho_s"); it != e.end())
      a.rho_s = as_number(*it, path + ".rho_s");
    if (auto it = e.find("rho_t"); it != e.end())
      a.rho_t = as_number(*it, path + ".rho_t");
    if (auto it = e.find("gamma_max"); it != e.end())
      a.gamma_max = as_number(*it, path + ".gamma_max");
    if (auto it = e.find("agreement_bonus"); it != e.end())
      a.agreement_bonus = as_bool(*it, path + ".agreement_bonus");
    cfg.algorithms.push_back(std::move(a));
  }

  if (auto it = j.find("target_fractions"); it != j.end())
    cfg.target_fractions = as_number_array(*it, "target_fractions");
  if (auto it = j.find("seeds"); it != j.end()) {
    if (!it->is_array()) fail("seeds", "expected an array of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "seeds[" + std::to_string(i) + "]";
      const njson& s = (*it)[i];
      if (!s.is_number_integer()) fail(path, "expected an integer");
      if (s.is_number_integer() && !s.is_number_unsigned() &&
          s.get<long long>() < 0)
        fail(path, "must be >= 0");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (auto it = j.find("metrics"); it != j.end()) {
    if (!it->is_array()) fail("metrics", "expected an array of strings");
    cfg.metrics.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "metrics[" + std::to_string(i) + "]";
      std::string m = as_string((*it)[i], path);
      if (m == "error_rate")
        cfg.metrics.push_back(Metric::error_rate);
      else if (m == "rmse")
        cfg.metrics.push_back(Metric::rmse);
      else
        fail(path, "unknown metric \"" + m + "\" (error_rate, rmse)");
    }
  }
  if (auto it = j.find("standardize"); it != j.end())
    cfg.standardize = as_bool(*it, "standardize");
  if (auto it = j.find("augment_bias"); it != j.end())
    cfg.augment_bias = as_bool(*it, "augment_bias");
  if (auto it = j.find("out"); it != j.end())
    cfg.out = as_string(*it, "out");
  if (auto it = j.find("sweep"); it != j.end()) {
    need_object(*it, "sweep");
    check_keys(*it, "sweep", {"axis", "grid"});
    SweepSpec s;
    s.axis = sweep_axis_from_name(
        as_string(member(*it, "axis", "sweep"), "sweep.axis"));
    s.grid = as_number_array(member(*it, "grid", "sweep"), "sweep.grid");
    cfg.sweep_spec = s;
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_json_text(read_file(path));
}

ProblemSpec problem_from_file(const std::string& path) {
  njson j = parse_document(read_file(path));
  need_object(j, "config");
  return parse_problem(member(j, "problem", "config"));
}

GapCommandConfig GapCommandConfig::from_file(const std::string& path) {
  njson j = parse_document(read_file(path));
  need_object(j, "config");
  GapCommandConfig cfg;
  cfg.problem = parse_problem(member(j, "problem", "config"));
  if (auto it = j.find("gap"); it != j.end()) {
    need_object(*it, "gap");
    check_keys(*it, "gap", {"lambda", "eta", "source_mass", "loss", "q"});
    if (auto f = it->find("lambda"); f != it->end())
      cfg.lambda = as_number(*f, "gap.lambda");
    if (auto f = it->find("eta"); f != it->end())
      cfg.eta = as_number(*f, "gap.eta");
    if (auto f = it->find("source_mass"); f != it->end())
      cfg.source_mass = as_number(*f, "gap.source_mass");
    if (auto f = it->find("loss"); f != it->end()) {
      cfg.loss.kind =
          loss_kind_from_name(as_string(*f, "gap.loss"), "gap.loss");
      if (auto q = it->find("q"); q != it->end()) {
        if (cfg.loss.kind != LossKind::lq)
          fail("gap.q", "only meaningful with the lq loss");
        cfg.loss.q = as_number(*q, "gap.q");
      }
      try {
        cfg.loss.validate();
      } catch (const std::invalid_argument& e) {
        fail("gap.loss", e.what());
      }
    } else if (it->find("q") != it->end()) {
      fail("gap.q", "only meaningful with the lq loss");
    }
  }
  if (!(cfg.lambda > 0.0)) fail("gap.lambda", "must be > 0");
  if (!(cfg.eta >= 0.0 && cfg.eta < 0.5)) fail("gap.eta", "must be in [0, 0.5)");
  if (cfg.source_mass >= 0.0 && !(cfg.source_mass <= 1.0))
    fail("gap.source_mass", "must be in [0, 1]");
  if (!trainable(cfg.loss))
    fail("gap.loss",
         cfg.loss.kind_name() + " loss is not supported for training");
  return cfg;
}

std::string gap_report_json(const GapCommandConfig& cfg, std::uint64_t seed) {
  cfg.problem.validate();
  TransferProblem prob = cfg.problem.materialize(seed);
  std::size_t nt = prob.target.size();
  std::size_t ns = prob.source.size();
  if (ns == 0) fail("problem", "the gap needs a nonempty source sample");
  double source_mass = cfg.source_mass >= 0.0
                           ? cfg.source_mass
                           : static_cast<double>(ns) /
                                 static_cast<double>(nt + ns);
  WeightVector gamma(
      std::vector<double>(nt, (1.0 - source_mass) / static_cast<double>(nt)),
      std::vector<double>(ns, source_mass / static_cast<double>(ns)));
  TrainSpec spec;
  spec.loss = cfg.loss;
  spec.lambda = cfg.lambda;
  GapReport report = instance_gap(prob.target, prob.source, gamma, spec,
                                  cfg.eta);
  return report.to_json();
}

// ---- running ----

std::pair<Sample, Sample> split_target(const Sample& target, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    fail("target_fractions", "fraction must be in (0, 1]");
  std::size_t n = target.size();
  if (n < 2) fail("problem", "target sample needs at least 2 points to split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Engine g(seed);
  rng::shuffle(order, g);
  auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  n_train = std::max<std::size_t>(1, n_train);
  if (n_train >= n)
    fail("target_fractions",
         "fraction " + fmt(fraction) + " leaves an empty test set");
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(target, train_idx), subset(target, test_idx)};
}

BoostResult train_algorithm(const AlgoSpec& algo, const Sample& source,
                            const Sample& target_train) {
  BoostConfig cfg = resolve_config(algo, target_train.size());
  BoostResult res;
  switch (algo.kind) {
    case AlgorithmKind::gap_boost:
      res = gap_boost(source, target_train, cfg);
      break;
    case AlgorithmKind::gap_boost_r:
      res = gap_boost_r(source, target_train, cfg);
      break;
    default:
      res = run_baseline(to_baseline(algo.kind), source, target_train, cfg);
      break;
  }
  check_trace(res.trace);
  return res;
}

RunOutput run_experiment(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<Cell> cells;
  for (const AlgoSpec& algo : cfg.algorithms)
    for (double fraction : cfg.target_fractions)
      for (std::uint64_t seed : cfg.seeds)
        cells.push_back({algo, seed, fraction, "", 0.0});
  return finish(execute_cells(cfg, cells, jobs));
}

RunOutput sweep(const ExperimentConfig& cfg, SweepAxis axis,
                const std::vector<double>& grid, int jobs) {
  cfg.validate();
  if (grid.empty()) fail("sweep.grid", "must list at least 1 value");
  std::vector<Cell> cells;
  for (double value : grid) {
    ExperimentConfig point = cfg;
    point.sweep_spec.reset();
    for (AlgoSpec& algo : point.algorithms) apply_axis(algo, axis, value);
    if (axis == SweepAxis::TargetFraction) point.target_fractions = {value};
    try {
      point.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("sweep value " + fmt(value) + ": " + e.what());
    }
    for (const AlgoSpec& algo : point.algorithms)
      for (double fraction : point.target_fractions)
        for (std::uint64_t seed : point.seeds)
          cells.push_back({algo, seed, fraction, sweep_axis_name(axis), value});
  }
  return finish(execute_cells(cfg, cells, jobs));
}

std::vector<CellAggregate> aggregate(const std::vector<ResultRecord>& records) {
  using Key =
      std::tuple<std::string, std::string, std::string, double, double,
                 std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const ResultRecord& r : records)
    groups[{r.algorithm, r.problem, r.axis, r.axis_value, r.target_fraction,
            r.metric}]
        .push_back(r.value);
  std::vector<CellAggregate> out;
  for (const auto& [key, values] : groups) {
    CellAggregate agg;
    agg.algorithm = std::get<0>(key);
    agg.problem = std::get<1>(key);
    agg.axis = std::get<2>(key);
    agg.axis_value = std::get<3>(key);
    agg.target_fraction = std::get<4>(key);
    agg.metric = std::get<5>(key);
    agg.count = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    agg.mean = mean;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      agg.std_error = sd / std::sqrt(static_cast<double>(values.size()));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

// ---- output files ----

void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("out: cannot write " + path);
  out << "algorithm,problem,seed,target_fraction,axis,axis_value,"
         "hyperparameters,metric,value,wall_seconds\n";
  for (const ResultRecord& r : records) {
    out << r.algorithm << ',' << r.problem << ',' << r.seed << ','
        << fmt(r.target_fraction) << ',' << r.axis << ','
        << (r.axis.empty() ? std::string() : fmt(r.axis_value)) << ','
        << r.hyperparameters << ',' << r.metric << ',' << fmt(r.value) << ','
        << fmt(r.wall_seconds) << '\n';
  }
}

void write_aggregates_csv(const std::vector<CellAggregate>& aggregates,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("out: cannot write " + path);
  out << "algorithm,problem,target_fraction,axis,axis_value,metric,n,mean,"
         "std_error\n";
  for (const CellAggregate& a : aggregates) {
    out << a.algorithm << ',' << a.problem << ',' << fmt(a.target_fraction)
        << ',' << a.axis << ','
        << (a.axis.empty() ? std::string() : fmt(a.axis_value)) << ','
        << a.metric << ',' << a.count << ',' << fmt(a.mean) << ','
        << fmt(a.std_error) << '\n';
  }
}

void write_manifest(const ExperimentConfig& cfg, const std::string& path) {
  njson j;
  j["tool"] = "gapmin 0.1.0";
  j["config"] = njson::parse(cfg.to_json());
  std::ofstream out(path);
  if (!out) throw ConfigError("out: cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace gapmin
