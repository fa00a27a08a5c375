#include "gapmin/verify.hpp"

#include <cmath>
#include <limits>

#include "gapmin/gap.hpp"
#include "gapmin/multitask.hpp"
#include "gapmin/random.hpp"
#include "nlohmann/json.hpp"

namespace gapmin {

namespace {

constexpr double kSlackTol = 1e-6;
constexpr double kLimitTol = 1e-3;

SuiteReport fresh(const std::string& name, int trials) {
  SuiteReport rep;
  rep.name = name;
  rep.trials = trials;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  rep.min_nabla = std::numeric_limits<double>::infinity();
  return rep;
}

void record(SuiteReport& rep, double slack, double tol, std::string what) {
  ++rep.checks;
  rep.worst_slack = std::min(rep.worst_slack, slack);
  if (slack < -tol) {
    ++rep.violations;
    rep.deviations.push_back(std::move(what) +
                             ": slack = " + std::to_string(slack));
  }
}

void note_nabla(SuiteReport& rep, double v) {
  rep.min_nabla = std::min(rep.min_nabla, v);
}

// linear ground truth with additive noise
Sample random_sample(rng::Engine& eng, std::size_t n, std::size_t d,
                     DomainTag tag) {
  std::vector<double> w(d);
  for (double& v : w) v = rng::normal(eng);
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(n * d);
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.5 * rng::normal(eng);
    for (std::size_t j = 0; j < d; ++j) {
      double x = rng::normal(eng);
      xs.push_back(x);
      y += w[j] * x;
    }
    ys.push_back(y);
  }
  return Sample(std::move(xs), std::move(ys), d, tag);
}

std::vector<double> raw_uniform_weights(rng::Engine& eng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = rng::uniform01(eng);
  return w;
}

TaskSet random_tasks(rng::Engine& eng, std::size_t k, std::size_t d,
                     std::size_t n_lo, std::size_t n_hi) {
  TaskSet tasks;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t n = n_lo + rng::below(eng, n_hi - n_lo + 1);
    tasks.tasks.push_back(
        random_sample(eng, n, d, DomainTag::task(static_cast<int>(j))));
  }
  return tasks;
}

TrainSpec squared_spec(double lambda) {
  TrainSpec spec;
  spec.loss.kind = LossKind::squared;
  spec.lambda = lambda;
  return spec;
}

double pick(rng::Engine& eng, std::initializer_list<double> options) {
  std::size_t i = rng::below(eng, options.size());
  return options.begin()[i];
}

// pooled sample over all tasks with per-example weight 1/(K N_k)
std::pair<Sample, std::vector<double>> pooled(const TaskSet& tasks) {
  Sample joined = tasks.tasks[0];
  for (std::size_t k = 1; k < tasks.count(); ++k)
    joined = concat(joined, tasks.tasks[k], DomainTag::task(-1));
  std::vector<double> w;
  double k_real = static_cast<double>(tasks.count());
  for (const Sample& t : tasks.tasks)
    w.insert(w.end(), t.size(), 1.0 / (k_real * static_cast<double>(t.size())));
  return {std::move(joined), std::move(w)};
}

double max_coord_diff(const LinearHypothesis& a, const LinearHypothesis& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.w.size(); ++i)
    m = std::max(m, std::fabs(a.w[i] - b.w[i]));
  return m;
}

}  // namespace

std::string SuiteReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["trials"] = trials;
  j["checks"] = checks;
  j["violations"] = violations;
  j["worst_slack"] = worst_slack;
  j["min_nabla"] = min_nabla;
  j["deviations"] = deviations;
  return j.dump();
}

SuiteReport lemma1_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("lemma1", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t d = 1 + rng::below(eng, 10);
    std::size_t nt = 3 + rng::below(eng, 98);
    std::size_t ns = 3 + rng::below(eng, 98);
    Sample st = random_sample(eng, nt, d, DomainTag::target());
    Sample ss = random_sample(eng, ns, d, DomainTag::source());
    WeightVector gamma(raw_uniform_weights(eng, nt),
                       raw_uniform_weights(eng, ns));
    for (double eta : {0.0, 0.1, 0.25}) {
      for (double lambda : {0.1, 1.0, 10.0}) {
        GapReport g = instance_gap(st, ss, gamma, squared_spec(lambda), eta);
        double radicand =
            g.nabla / (2.0 * lambda * (1.0 - 2.0 * eta)) +
            0.5 * (g.norm_h_s * g.norm_h_s + g.norm_h_t * g.norm_h_t);
        double slack = radicand - g.norm_h_star * g.norm_h_star;
        note_nabla(rep, std::min(g.nabla_s, g.nabla_t));
        record(rep, slack, kSlackTol,
               "trial " + std::to_string(t) + " eta=" + std::to_string(eta) +
                   " lambda=" + std::to_string(lambda));
      }
    }
  }
  return rep;
}

SuiteReport lemma3_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("lemma3", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t d = 1 + rng::below(eng, 8);
    std::size_t n = 5 + rng::below(eng, 56);
    Sample st = random_sample(eng, n, d, DomainTag::target());
    std::size_t k = 1 + rng::below(eng, 5);
    HypothesisBank bank;
    for (std::size_t i = 0; i < k; ++i) {
      LinearHypothesis h{std::vector<double>(d)};
      for (double& v : h.w) v = rng::normal(eng);
      bank.hypotheses.push_back(std::move(h));
    }
    for (std::size_t i = 0; i < k; ++i)
      bank.xi.push_back(rng::uniform(eng, -1.0, 1.0));
    double lambda = pick(eng, {0.1, 1.0, 10.0});
    auto [h_star, g] = hypothesis_transfer_train(st, bank, squared_spec(lambda));
    note_nabla(rep, g.nabla);
    record(rep, g.slack, kSlackTol, "trial " + std::to_string(t));
  }
  return rep;
}

SuiteReport lemma5_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("lemma5", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 2 + rng::below(eng, 3);
    std::size_t d = 1 + rng::below(eng, 6);
    TaskSet tasks = random_tasks(eng, k, d, 4, 40);
    std::vector<double> gamma = raw_uniform_weights(eng, k);
    double total = 0.0;
    for (double v : gamma) total += v;
    for (double& v : gamma) v /= total;
    TaskRelation rel{gamma};
    double lambda = pick(eng, {0.1, 1.0, 10.0});
    std::size_t j = rng::below(eng, k);
    for (double eta : {0.0, 0.5}) {
      MtlSolution sol =
          task_weighting_train(tasks, j, rel, squared_spec(lambda), eta);
      note_nabla(rep, sol.gap.nabla);
      record(rep, sol.gap.slack[0], kSlackTol,
             "trial " + std::to_string(t) + " eta=" + std::to_string(eta));
    }
  }
  return rep;
}

SuiteReport lemma6_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("lemma6", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 1 + rng::below(eng, 4);
    std::size_t d = 1 + rng::below(eng, 6);
    TaskSet tasks = random_tasks(eng, k, d, 4, 40);
    double lambda0 = std::exp(rng::uniform(eng, std::log(0.1), std::log(10.0)));
    double lambda = std::exp(rng::uniform(eng, std::log(0.1), std::log(10.0)));
    MtlSolution sol =
        parameter_sharing_train(tasks, lambda0, lambda, squared_spec(1.0));
    note_nabla(rep, sol.gap.nabla);
    for (std::size_t j = 0; j < k; ++j)
      record(rep, sol.gap.slack[j], kSlackTol,
             "trial " + std::to_string(t) + " task " + std::to_string(j));
  }
  return rep;
}

SuiteReport lemma7_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("lemma7", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 1 + rng::below(eng, 4);
    std::size_t d = 1 + rng::below(eng, 6);
    TaskSet tasks = random_tasks(eng, k, d, 4, 40);
    // random SPD Omega = B^T B + I/2
    std::vector<double> b(k * k);
    for (double& v : b) v = rng::normal(eng);
    std::vector<double> omega(k * k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        double acc = r == c ? 0.5 : 0.0;
        for (std::size_t m = 0; m < k; ++m) acc += b[m * k + r] * b[m * k + c];
        omega[r * k + c] = acc;
      }
    }
    CovarianceSpec cov = CovarianceSpec::from_matrix(omega, k);
    MtlSolution sol = task_covariance_train(tasks, cov, squared_spec(1.0));
    note_nabla(rep, sol.gap.nabla);
    for (std::size_t j = 0; j < k; ++j)
      record(rep, sol.gap.slack[j], kSlackTol,
             "trial " + std::to_string(t) + " task " + std::to_string(j));
  }
  return rep;
}

SuiteReport identity_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("sharing_covariance_identity", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 3;
    std::size_t d = 2 + rng::below(eng, 4);
    TaskSet tasks = random_tasks(eng, k, d, 5, 30);
    double lambda0 = rng::uniform(eng, 0.2, 5.0);
    double lambda = rng::uniform(eng, 0.2, 5.0);
    MtlSolution sharing =
        parameter_sharing_train(tasks, lambda0, lambda, squared_spec(1.0));

    double k_real = static_cast<double>(k);
    double pi1 = lambda0 * lambda / (k_real * (lambda0 + lambda));
    double pi2 = lambda * lambda / (k_real * (lambda0 + lambda));
    std::vector<double> prec(k * k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        double m = (r == c ? 1.0 : 0.0) - 1.0 / k_real;
        prec[r * k + c] = (r == c ? pi1 : 0.0) + pi2 * m;
      }
    }
    CovarianceSpec cov = CovarianceSpec::from_precision(prec, k);
    MtlSolution covariance = task_covariance_train(tasks, cov, squared_spec(1.0));
    note_nabla(rep, std::min(sharing.gap.nabla, covariance.gap.nabla));
    for (std::size_t j = 0; j < k; ++j) {
      double diff =
          max_coord_diff(sharing.hypotheses[j], covariance.hypotheses[j]);
      record(rep, kSlackTol - diff, 0.0,
             "trial " + std::to_string(t) + " task " + std::to_string(j) +
                 " coord diff " + std::to_string(diff));
    }
  }
  return rep;
}

SuiteReport limits_suite(int trials, std::uint64_t seed) {
  SuiteReport rep = fresh("sharing_limits", trials);
  rng::Engine eng(seed);
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 2 + rng::below(eng, 3);
    std::size_t d = 1 + rng::below(eng, 5);
    TaskSet tasks = random_tasks(eng, k, d, 5, 30);
    double lambda = rng::uniform(eng, 0.5, 3.0);

    // lambda0 -> inf: w0 vanishes, tasks decouple into ridge(lambda)
    MtlSolution big0 =
        parameter_sharing_train(tasks, 1e6, lambda, squared_spec(1.0));
    note_nabla(rep, big0.gap.nabla);
    record(rep, kLimitTol - big0.shared->norm(), 0.0,
           "trial " + std::to_string(t) + " ||w0|| = " +
               std::to_string(big0.shared->norm()));
    for (std::size_t j = 0; j < k; ++j) {
      const Sample& task = tasks.tasks[j];
      LinearHypothesis ridge = train_weighted(
          task, std::vector<double>(task.size(), 1.0 / task.size()),
          squared_spec(lambda));
      double diff = max_coord_diff(big0.hypotheses[j], ridge);
      record(rep, kLimitTol - diff, 0.0,
             "trial " + std::to_string(t) + " task " + std::to_string(j) +
                 " vs single-task ridge, diff " + std::to_string(diff));
    }

    // lambda -> inf: offsets vanish, every task gets the pooled ridge(lambda0)
    double lambda0 = rng::uniform(eng, 0.5, 3.0);
    MtlSolution big =
        parameter_sharing_train(tasks, lambda0, 1e6, squared_spec(1.0));
    note_nabla(rep, big.gap.nabla);
    auto [pool, pool_w] = pooled(tasks);
    LinearHypothesis pooled_ridge =
        train_weighted(pool, pool_w, squared_spec(lambda0));
    for (std::size_t j = 0; j < k; ++j) {
      double diff = max_coord_diff(big.hypotheses[j], pooled_ridge);
      record(rep, kLimitTol - diff, 0.0,
             "trial " + std::to_string(t) + " task " + std::to_string(j) +
                 " vs pooled ridge, diff " + std::to_string(diff));
    }
  }
  return rep;
}

std::vector<SuiteReport> run_all_suites(std::uint64_t seed) {
  return {lemma1_suite(100, seed),        lemma3_suite(100, seed + 1),
          lemma5_suite(100, seed + 2),    lemma6_suite(100, seed + 3),
          lemma7_suite(100, seed + 4),    identity_suite(10, seed + 5),
          limits_suite(10, seed + 6)};
}

}  // namespace gapmin
