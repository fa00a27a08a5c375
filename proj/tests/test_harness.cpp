#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gapmin/harness.hpp"
#include "nlohmann/json.hpp"

using namespace gapmin;

namespace {

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

Sample indexed_target(std::size_t n) {
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = static_cast<double>(i) * 0.5;
    ys[i] = static_cast<double>(i);
  }
  return Sample(xs, ys, 1, DomainTag::target());
}

std::set<double> label_set(const Sample& s) {
  std::set<double> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.insert(s.y(i));
  return out;
}

std::string parse_error(const std::string& text) {
  try {
    ExperimentConfig::from_json_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.problem.kind = "gaussian_shift";
  cfg.problem.n_source = 40;
  cfg.problem.n_target = 40;
  cfg.problem.shift = {0.5, 0.5};
  cfg.problem.flip_prob = 0.05;

  AlgoSpec gap;
  gap.kind = AlgorithmKind::gap_boost;
  gap.rounds = 3;
  gap.loss = LossSpec{LossKind::squared};
  AlgoSpec base;
  base.kind = AlgorithmKind::adaboost_t;
  base.rounds = 3;
  base.loss = LossSpec{LossKind::squared};
  cfg.algorithms = {gap, base};
  cfg.target_fractions = {0.3, 0.5};
  cfg.seeds = {1, 2, 3};
  cfg.metrics = {Metric::error_rate};
  return cfg;
}

bool same_modulo_wall(const std::vector<ResultRecord>& a,
                      const std::vector<ResultRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const ResultRecord &x = a[i], &y = b[i];
    if (x.algorithm != y.algorithm || x.problem != y.problem ||
        x.seed != y.seed || x.target_fraction != y.target_fraction ||
        x.axis != y.axis || x.axis_value != y.axis_value ||
        x.hyperparameters != y.hyperparameters || x.metric != y.metric ||
        x.value != y.value)
      return false;
  }
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("split_target partitions deterministically") {
  Sample target = indexed_target(20);
  auto [train, test] = split_target(target, 0.3, 11);
  CHECK(train.size() == 6);
  CHECK(test.size() == 14);

  std::set<double> seen = label_set(train);
  for (double y : label_set(test)) {
    CHECK(seen.count(y) == 0);
    seen.insert(y);
  }
  CHECK(seen.size() == 20);

  // subset keeps the original ordering inside each side
  for (std::size_t i = 1; i < train.size(); ++i)
    CHECK(train.y(i) > train.y(i - 1));

  auto [train2, test2] = split_target(target, 0.3, 11);
  CHECK(label_set(train2) == label_set(train));
  auto [train3, test3] = split_target(target, 0.3, 12);
  CHECK(label_set(train3) != label_set(train));
}

TEST_CASE("split_target nests train sets for growing fractions") {
  Sample target = indexed_target(20);
  auto [small_train, small_test] = split_target(target, 0.2, 7);
  auto [big_train, big_test] = split_target(target, 0.4, 7);
  CHECK(small_train.size() == 4);
  CHECK(big_train.size() == 8);
  std::set<double> big = label_set(big_train);
  for (double y : label_set(small_train)) CHECK(big.count(y) == 1);
}

TEST_CASE("split_target guards") {
  Sample target = indexed_target(10);
  CHECK_THROWS_AS(split_target(target, 1.0, 1), ConfigError);
  try {
    split_target(target, 1.0, 1);
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "leaves an empty test set"));
  }
  CHECK_THROWS_AS(split_target(target, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_target(target, -0.2, 1), ConfigError);
  CHECK_THROWS_AS(split_target(indexed_target(1), 0.5, 1), ConfigError);

  // tiny fractions clamp to one training point
  auto [train, test] = split_target(target, 0.01, 3);
  CHECK(train.size() == 1);
  CHECK(test.size() == 9);
}

TEST_CASE("auto gamma_max resolves to one over sqrt of the train size") {
  ProblemSpec prob;
  prob.kind = "gaussian_shift";
  prob.n_source = 30;
  prob.n_target = 40;
  prob.shift = {0.8};
  TransferProblem data = prob.materialize(21);
  auto [train, test] = split_target(data.target, 0.4, 21);
  REQUIRE(train.size() == 16);

  AlgoSpec algo;
  algo.kind = AlgorithmKind::gap_boost;
  algo.rounds = 4;
  algo.loss = LossSpec{LossKind::squared};
  BoostResult implicit = train_algorithm(algo, data.source, train);
  algo.gamma_max = 0.25;  // 1/sqrt(16)
  BoostResult explicit_cap = train_algorithm(algo, data.source, train);
  CHECK(implicit.trace.to_json() == explicit_cap.trace.to_json());
}

TEST_CASE("run_experiment covers the grid, sorted and reproducible") {
  ExperimentConfig cfg = small_experiment();
  RunOutput out = run_experiment(cfg);
  REQUIRE(out.records.size() == 12);

  std::set<std::tuple<std::string, double, std::uint64_t>> combos;
  for (const ResultRecord& r : out.records) {
    CHECK(r.problem == "gaussian_shift");
    CHECK(r.metric == "error_rate");
    CHECK(r.axis.empty());
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    combos.insert({r.algorithm, r.target_fraction, r.seed});
  }
  CHECK(combos.size() == 12);

  for (std::size_t i = 1; i < out.records.size(); ++i) {
    const ResultRecord &a = out.records[i - 1], &b = out.records[i];
    CHECK(std::tie(a.algorithm, a.target_fraction, a.seed) <=
          std::tie(b.algorithm, b.target_fraction, b.seed));
  }

  RunOutput again = run_experiment(cfg);
  CHECK(same_modulo_wall(out.records, again.records));
  RunOutput parallel = run_experiment(cfg, 3);
  CHECK(same_modulo_wall(out.records, parallel.records));

  REQUIRE(out.aggregates.size() == 4);
  for (const CellAggregate& agg : out.aggregates) {
    CHECK(agg.count == 3);
    double sum = 0.0, n = 0.0;
    for (const ResultRecord& r : out.records)
      if (r.algorithm == agg.algorithm &&
          r.target_fraction == agg.target_fraction) {
        sum += r.value;
        n += 1.0;
      }
    CHECK(std::fabs(agg.mean - sum / n) <= 1e-12);
  }
}

TEST_CASE("metric filter drops algorithms of the other mode") {
  ExperimentConfig cfg = small_experiment();
  cfg.metrics = {Metric::rmse};
  RunOutput out = run_experiment(cfg);
  CHECK(out.records.empty());
  CHECK(out.aggregates.empty());

  AlgoSpec reg;
  reg.kind = AlgorithmKind::gap_boost_r;
  reg.rounds = 3;
  reg.loss = LossSpec{LossKind::squared};
  cfg.algorithms.push_back(reg);
  RunOutput mixed = run_experiment(cfg);
  CHECK(mixed.records.size() == 6);  // 2 fractions x 3 seeds, gapBoostR only
  for (const ResultRecord& r : mixed.records) {
    CHECK(r.algorithm == "gapBoostR");
    CHECK(r.metric == "rmse");
  }
}

TEST_CASE("aggregate hand values") {
  ResultRecord a;
  a.algorithm = "gapBoost";
  a.problem = "gaussian_shift";
  a.seed = 1;
  a.target_fraction = 0.1;
  a.metric = "error_rate";
  a.value = 0.2;
  ResultRecord b = a;
  b.seed = 2;
  b.value = 0.4;
  ResultRecord lone = a;
  lone.target_fraction = 0.5;
  lone.value = 0.9;

  std::vector<CellAggregate> aggs = aggregate({a, b, lone});
  REQUIRE(aggs.size() == 2);
  const CellAggregate& pair = aggs[0].count == 2 ? aggs[0] : aggs[1];
  const CellAggregate& single = aggs[0].count == 2 ? aggs[1] : aggs[0];
  CHECK(pair.count == 2);
  CHECK(pair.mean == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pair.std_error == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(single.count == 1);
  CHECK(single.mean == 0.9);
  CHECK(single.std_error == 0.0);
}

TEST_CASE("sweep tags records and only moves the gap entries") {
  ExperimentConfig cfg = small_experiment();
  cfg.target_fractions = {0.3};
  cfg.seeds = {1, 2};
  RunOutput out = sweep(cfg, SweepAxis::RhoS, {-0.9, -0.3});
  REQUIRE(out.records.size() == 8);

  for (const ResultRecord& r : out.records) {
    CHECK(r.axis == "rho_s");
    CHECK((r.axis_value == -0.9 || r.axis_value == -0.3));
  }
  // baseline records ignore the axis: same value at both grid points
  for (std::uint64_t seed : cfg.seeds) {
    std::vector<double> base_vals;
    std::set<std::string> gap_params;
    for (const ResultRecord& r : out.records) {
      if (r.seed != seed) continue;
      if (r.algorithm == "AdaBoostT") base_vals.push_back(r.value);
      if (r.algorithm == "gapBoost") gap_params.insert(r.hyperparameters);
    }
    REQUIRE(base_vals.size() == 2);
    CHECK(base_vals[0] == base_vals[1]);
    CHECK(gap_params.size() == 2);
    for (const std::string& s : gap_params)
      CHECK((contains(s, "rho_s=-0.9") || contains(s, "rho_s=-0.3")));
  }
}

TEST_CASE("sweep over target_fraction replaces the fraction list") {
  ExperimentConfig cfg = small_experiment();
  cfg.seeds = {1};
  RunOutput out = sweep(cfg, SweepAxis::TargetFraction, {0.25, 0.5});
  REQUIRE(out.records.size() == 4);
  for (const ResultRecord& r : out.records) {
    CHECK(r.axis == "target_fraction");
    CHECK(r.target_fraction == r.axis_value);
    CHECK((r.target_fraction == 0.25 || r.target_fraction == 0.5));
  }
}

TEST_CASE("sweep rejects grid values that break the config") {
  ExperimentConfig cfg = small_experiment();
  try {
    sweep(cfg, SweepAxis::GammaMax, {0.0});
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "sweep value 0"));
  }
  CHECK_THROWS_AS(sweep(cfg, SweepAxis::RhoS, {0.5}), ConfigError);
  CHECK_THROWS_AS(sweep(cfg, SweepAxis::RhoS, {}), ConfigError);
}

TEST_CASE("config parsing: minimal document fills defaults") {
  std::string text = R"({
    "problem": {"kind": "gaussian_shift", "shift": [1.0]},
    "algorithms": [{"name": "gapBoost"}]
  })";
  ExperimentConfig cfg = ExperimentConfig::from_json_text(text);
  CHECK(cfg.problem.n_source == 200);
  CHECK(cfg.problem.n_target == 100);
  REQUIRE(cfg.algorithms.size() == 1);
  CHECK(cfg.algorithms[0].kind == AlgorithmKind::gap_boost);
  CHECK(cfg.algorithms[0].rounds == 20);
  CHECK(cfg.algorithms[0].rho_s == kDefaultRhoS);
  CHECK(cfg.algorithms[0].rho_t == 0.0);
  CHECK(!cfg.algorithms[0].gamma_max.has_value());
  CHECK(!cfg.algorithms[0].loss.has_value());
  CHECK(cfg.target_fractions == std::vector<double>{0.1});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.metrics.size() == 2);
  CHECK(!cfg.sweep_spec.has_value());

  nlohmann::json echo = nlohmann::json::parse(cfg.to_json());
  CHECK(echo["algorithms"][0]["loss"]["kind"].get<std::string>() == "logistic");
  CHECK(echo["algorithms"][0]["gamma_max"].get<std::string>() == "auto");
  CHECK(echo["algorithms"][0]["agreement_bonus"].get<bool>() == false);
  CHECK(echo["problem"]["kind"].get<std::string>() == "gaussian_shift");
}

TEST_CASE("config parsing errors carry field paths") {
  std::string base = R"({
    "problem": {"kind": "gaussian_shift", "shift": [1.0]},
    "algorithms": [{"name": "gapBoost"}]
  })";

  CHECK(contains(parse_error(R"({"algorithms": []})"),
                 "config.problem: missing required key"));
  CHECK(contains(
      parse_error(R"({"problem": {"kind": "gaussian_shift", "shift": [1]}})"),
      "config.algorithms: missing required key"));
  CHECK(contains(parse_error("{ nope"), "config:"));

  auto swap = [&](const std::string& what) {
    std::string text = base;
    text.insert(text.rfind('}'), what);
    return parse_error(text);
  };
  CHECK(contains(swap(R"(, "bogus": 1)"), "config.bogus: unknown key"));
  CHECK(contains(swap(R"(, "seeds": [-4])"), "seeds[0]: must be >= 0"));
  CHECK(contains(swap(R"(, "seeds": [1.5])"), "seeds[0]: expected an integer"));
  CHECK(contains(swap(R"(, "metrics": ["mse"])"),
                 "metrics[0]: unknown metric \"mse\""));
  CHECK(contains(swap(R"(, "target_fractions": [1.5])"),
                 "target_fractions[0]: must be in (0, 1]"));
  CHECK(contains(swap(R"(, "target_fractions": [])"),
                 "target_fractions: must list at least 1 fraction"));
  CHECK(contains(swap(R"(, "sweep": {"axis": "nope", "grid": [1]})"),
                 "sweep.axis: unknown axis"));
  CHECK(contains(swap(R"(, "sweep": {"axis": "rho_s"})"),
                 "sweep.grid: missing required key"));
  CHECK(contains(swap(R"(, "standardize": "yes")"),
                 "standardize: expected a boolean"));

  CHECK(contains(parse_error(R"({
    "problem": {"kind": "mystery"},
    "algorithms": [{"name": "gapBoost"}]
  })"),
                 "problem.kind: unknown kind \"mystery\""));
  CHECK(contains(parse_error(R"({
    "problem": {"kind": "gaussian_shift", "shift": [1], "n_src": 3},
    "algorithms": [{"name": "gapBoost"}]
  })"),
                 "problem.n_src: unknown key"));
  CHECK(contains(parse_error(R"({
    "problem": {"kind": "gaussian_shift", "shift": [1], "flip_prob": 0.5},
    "algorithms": [{"name": "gapBoost"}]
  })"),
                 "problem.flip_prob: must be in [0, 0.5)"));
  CHECK(contains(parse_error(R"({
    "problem": {"kind": "csv", "source_path": "a.csv"},
    "algorithms": [{"name": "gapBoost"}]
  })"),
                 "problem.target_path: must be set"));

  auto algo_error = [&](const std::string& entry) {
    return parse_error(R"({
      "problem": {"kind": "gaussian_shift", "shift": [1.0]},
      "algorithms": [)" +
                       entry + "]}");
  };
  CHECK(contains(algo_error(R"({"name": "MysteryBoost"})"),
                 "algorithms[0].name"));
  CHECK(contains(algo_error(R"({"name": "MysteryBoost"})"),
                 "unknown algorithm"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "rounds": "five"})"),
                 "algorithms[0].rounds: expected an integer"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "q": 3.0})"),
                 "algorithms[0].q: only meaningful with the lq loss"));
  CHECK(contains(
      algo_error(R"({"name": "gapBoost", "loss": "squared", "q": 3.0})"),
      "algorithms[0].q: only meaningful with the lq loss"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "loss": "absolute"})"),
                 "absolute loss is not supported as a base learner"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "loss": "lq", "q": 1.5})"),
                 "not supported as a base learner"));
  CHECK(contains(algo_error(R"({"name": "AdaBoostT", "rho_s": -0.5})"),
                 "algorithms[0].rho_s: unknown key"));
  CHECK(contains(algo_error(R"({"name": "gapBoostR", "agreement_bonus": true})"),
                 "algorithms[0].agreement_bonus: unknown key"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "rho_s": 0.5})"),
                 "algorithms[0]:"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "gamma_max": 2.0})"),
                 "algorithms[0]:"));
  CHECK(contains(algo_error(R"({"name": "gapBoost", "rounds": 0})"),
                 "algorithms[0]:"));
}

TEST_CASE("config files: loading, problem-only reads, gap section") {
  std::string path = "/tmp/gapmin_hn_cfg.json";
  {
    std::ofstream f(path);
    f << R"({
      "problem": {"kind": "gaussian_shift", "shift": [0.5], "n_source": 30,
                  "n_target": 20},
      "algorithms": [{"name": "gapBoost", "rounds": 2, "loss": "squared"}],
      "seeds": [4], "metrics": ["error_rate"]
    })";
  }
  ExperimentConfig cfg = ExperimentConfig::from_file(path);
  CHECK(cfg.problem.n_source == 30);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4});

  ProblemSpec prob = problem_from_file(path);
  CHECK(prob.kind == "gaussian_shift");
  CHECK(prob.n_target == 20);
  std::remove(path.c_str());

  CHECK_THROWS_AS(ExperimentConfig::from_file("/tmp/gapmin_hn_missing.json"),
                  ConfigError);

  std::string gap_path = "/tmp/gapmin_hn_gap.json";
  {
    std::ofstream f(gap_path);
    f << R"({
      "problem": {"kind": "gaussian_shift", "shift": [1.0], "n_source": 30,
                  "n_target": 20},
      "gap": {"lambda": 2.0, "eta": 0.25, "source_mass": 0.5, "loss": "hinge"}
    })";
  }
  GapCommandConfig gcfg = GapCommandConfig::from_file(gap_path);
  CHECK(gcfg.lambda == 2.0);
  CHECK(gcfg.eta == 0.25);
  CHECK(gcfg.source_mass == 0.5);
  CHECK(gcfg.loss.kind == LossKind::hinge);

  std::string report = gap_report_json(gcfg, 9);
  nlohmann::json j = nlohmann::json::parse(report);
  CHECK(j["setting"].get<std::string>() == "instance_weighting");
  CHECK(j["lambda"].get<double>() == 2.0);
  CHECK(j["eta"].get<double>() == 0.25);
  CHECK(j["slack"].get<double>() >= -1e-6);
  std::remove(gap_path.c_str());

  auto gap_error = [](const std::string& body) {
    std::string p = "/tmp/gapmin_hn_gap_err.json";
    std::ofstream f(p);
    f << body;
    f.close();
    try {
      GapCommandConfig::from_file(p);
    } catch (const ConfigError& e) {
      std::remove(p.c_str());
      return std::string(e.what());
    }
    std::remove(p.c_str());
    return std::string();
  };
  std::string head = R"({"problem": {"kind": "gaussian_shift", "shift": [1]},)";
  CHECK(contains(gap_error(head + R"( "gap": {"eta": 0.6}})"),
                 "gap.eta: must be in [0, 0.5)"));
  CHECK(contains(gap_error(head + R"( "gap": {"source_mass": 1.5}})"),
                 "gap.source_mass"));
  CHECK(contains(gap_error(head + R"( "gap": {"loss": "absolute"}})"),
                 "gap.loss"));
  CHECK(contains(gap_error(head + R"( "gap": {"q": 3.0}})"),
                 "gap.q: only meaningful with the lq loss"));
  CHECK(contains(gap_error(head + R"( "gap": {"lambda": 0.0}})"),
                 "gap.lambda: must be > 0"));

  GapCommandConfig no_source = gcfg;
  no_source.problem.n_source = 0;
  CHECK_THROWS_AS(gap_report_json(no_source, 1), ConfigError);
}

TEST_CASE("hyperparameter strings") {
  AlgoSpec base;
  base.kind = AlgorithmKind::adaboost_r2_t;
  CHECK(base.hyperparameter_string() == "rounds=20;lambda=1;loss=squared");

  AlgoSpec gap;
  gap.kind = AlgorithmKind::gap_boost;
  gap.gamma_max = 0.25;
  gap.rho_s = -0.5;
  std::string s = gap.hyperparameter_string();
  CHECK(contains(s, "rounds=20"));
  CHECK(contains(s, "loss=logistic"));
  CHECK(contains(s, "rho_s=-0.5"));
  CHECK(contains(s, "rho_t=0"));
  CHECK(contains(s, "gamma_max=0.25"));
  CHECK(!contains(s, "agreement_bonus"));

  gap.gamma_max.reset();
  gap.agreement_bonus = true;
  gap.rho_t = 0.3;
  s = gap.hyperparameter_string();
  CHECK(contains(s, "gamma_max=auto"));
  CHECK(contains(s, "agreement_bonus=1"));

  AlgoSpec lq;
  lq.kind = AlgorithmKind::gap_boost_r;
  lq.loss = LossSpec{LossKind::lq, 2.5};
  s = lq.hyperparameter_string();
  CHECK(contains(s, "loss=lq;q=2.5"));
}

TEST_CASE("results and aggregates csv layout") {
  ExperimentConfig cfg = small_experiment();
  cfg.seeds = {1, 2};
  cfg.target_fractions = {0.3};
  RunOutput out = run_experiment(cfg);
  REQUIRE(out.records.size() == 4);

  std::string rpath = "/tmp/gapmin_hn_results.csv";
  write_results_csv(out.records, rpath);
  std::vector<std::string> lines = read_lines(rpath);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "algorithm,problem,seed,target_fraction,axis,axis_value,"
        "hyperparameters,metric,value,wall_seconds");
  CHECK(contains(lines[1], "AdaBoostT,gaussian_shift,1,0.3,,,"));
  std::remove(rpath.c_str());

  std::string apath = "/tmp/gapmin_hn_aggregates.csv";
  write_aggregates_csv(out.aggregates, apath);
  lines = read_lines(apath);
  REQUIRE(lines.size() == out.aggregates.size() + 1);
  CHECK(lines[0] ==
        "algorithm,problem,target_fraction,axis,axis_value,metric,n,mean,"
        "std_error");
  std::remove(apath.c_str());

  RunOutput swept = sweep(cfg, SweepAxis::RhoS, {-0.4});
  write_results_csv(swept.records, rpath);
  lines = read_lines(rpath);
  bool tagged = false;
  for (const std::string& line : lines)
    tagged = tagged || contains(line, ",rho_s,-0.4,");
  CHECK(tagged);
  std::remove(rpath.c_str());

  CHECK_THROWS_AS(write_results_csv(out.records, "/nonexistent_dir_x/y.csv"),
                  ConfigError);
}

TEST_CASE("manifest holds the tool stamp and the resolved config only") {
  ExperimentConfig cfg = small_experiment();
  std::string path = "/tmp/gapmin_hn_manifest.json";
  write_manifest(cfg, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str());
  CHECK(j.size() == 2);
  CHECK(j["tool"].get<std::string>() == "gapmin 0.1.0");
  CHECK(j["config"]["problem"]["kind"].get<std::string>() == "gaussian_shift");
  CHECK(j["config"]["algorithms"].size() == 2);
  std::remove(path.c_str());
}
