#include "gapmin/multitask.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "gapmin/kernels.hpp"
#include "nlohmann/json.hpp"

namespace gapmin {

namespace {

constexpr double kBlockTolerance = 1e-8;  // joint gradient target for
                                          // alternating minimization

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

// mean loss over one task, (1/N_k) sum_i loss
double task_loss(const LossSpec& loss, const LinearHypothesis& h,
                 const Sample& task) {
  std::vector<double> w = uniform_weights(task.size());
  return weighted_loss(loss, h, task, w);
}

// concatenation of all tasks (in order) with per-example weight
// scale_k / N_k for task k
struct Pooled {
  Sample sample;
  std::vector<double> weights;
};

Pooled pool_tasks(const TaskSet& tasks, const std::vector<double>& scale) {
  Sample joined = tasks.tasks[0];
  for (std::size_t k = 1; k < tasks.count(); ++k) {
    joined = concat(joined, tasks.tasks[k], DomainTag::task(-1));
  }
  std::vector<double> w;
  w.reserve(joined.size());
  for (std::size_t k = 0; k < tasks.count(); ++k) {
    double per = scale[k] / static_cast<double>(tasks.tasks[k].size());
    w.insert(w.end(), tasks.tasks[k].size(), per);
  }
  return {std::move(joined), std::move(w)};
}

// (1/N_k) * Gram and moment vector of one task
void task_moments(const Sample& task, Eigen::MatrixXd& A, Eigen::VectorXd& c) {
  std::size_t n = task.size();
  std::size_t d = task.dim();
  std::vector<double> G(d * d, 0.0), b(d, 0.0);
  std::vector<double> w = uniform_weights(n);
  std::vector<double> wy(n);
  for (std::size_t i = 0; i < n; ++i) wy[i] = w[i] * task.y(i);
  kernels::weighted_gram(task.x_data(), n, d, w.data(), wy.data(), G.data(),
                         b.data());
  A = Eigen::Map<Eigen::MatrixXd>(G.data(), d, d);
  c = Eigen::Map<Eigen::VectorXd>(b.data(), d);
}

double stacked_sqrt(double radicand) { return std::sqrt(std::max(radicand, 0.0)); }

}  // namespace

void TaskSet::validate() const {
  if (tasks.empty()) throw std::invalid_argument("TaskSet: no tasks");
  std::size_t d = tasks[0].dim();
  for (const Sample& t : tasks) {
    if (t.dim() != d)
      throw std::invalid_argument("TaskSet: tasks have mixed dimensions");
  }
}

TaskRelation TaskRelation::uniform(std::size_t k) {
  return TaskRelation{std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

TaskRelation TaskRelation::one_hot(std::size_t k, std::size_t j) {
  TaskRelation r{std::vector<double>(k, 0.0)};
  r.gamma.at(j) = 1.0;
  return r;
}

void TaskRelation::validate(std::size_t k) const {
  if (gamma.size() != k)
    throw std::invalid_argument("TaskRelation: wrong length");
  double total = 0.0;
  for (double g : gamma) {
    if (!std::isfinite(g) || g < 0.0)
      throw std::invalid_argument("TaskRelation: entries must be >= 0");
    total += g;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("TaskRelation: entries must sum to 1");
}

CovarianceSpec CovarianceSpec::from_matrix(const std::vector<double>& omega,
                                           std::size_t k) {
  if (k == 0 || omega.size() != k * k)
    throw std::invalid_argument("CovarianceSpec: bad matrix shape");
  Eigen::MatrixXd O(k, k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) O(r, c) = omega[r * k + c];
  double scale = O.cwiseAbs().maxCoeff();
  if ((O - O.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0))
    throw std::invalid_argument("CovarianceSpec: Omega must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(O);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("CovarianceSpec: Omega must be positive definite");
  CovarianceSpec spec;
  spec.k_ = k;
  spec.sigma_max_ = es.eigenvalues().maxCoeff();
  Eigen::MatrixXd inv = O.llt().solve(Eigen::MatrixXd::Identity(k, k));
  spec.omega_inv_.assign(k * k, 0.0);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) spec.omega_inv_[r * k + c] = inv(r, c);
  spec.omega_sum_ = inv.sum();
  return spec;
}

CovarianceSpec CovarianceSpec::from_precision(
    const std::vector<double>& omega_inv, std::size_t k) {
  if (k == 0 || omega_inv.size() != k * k)
    throw std::invalid_argument("CovarianceSpec: bad matrix shape");
  Eigen::MatrixXd P(k, k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) P(r, c) = omega_inv[r * k + c];
  double scale = P.cwiseAbs().maxCoeff();
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0))
    throw std::invalid_argument("CovarianceSpec: Omega^{-1} must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("CovarianceSpec: Omega^{-1} must be positive definite");
  CovarianceSpec spec;
  spec.k_ = k;
  spec.sigma_max_ = 1.0 / es.eigenvalues().minCoeff();
  spec.omega_inv_ = omega_inv;
  spec.omega_sum_ = P.sum();
  return spec;
}

std::string MtlSolution::to_json() const {
  nlohmann::json j;
  j["setting"] = setting;
  auto vecs = nlohmann::json::array();
  for (const auto& h : hypotheses) vecs.push_back(h.w);
  j["hypotheses"] = vecs;
  if (shared) {
    j["w0"] = shared->w;
    auto comps = nlohmann::json::array();
    for (const auto& h : task_components) comps.push_back(h.w);
    j["w"] = comps;
  }
  j["gap"] = {{"nabla", gap.nabla},
              {"lemma_bound", gap.lemma_bound},
              {"slack", gap.slack},
              {"solver_tolerance_caveat", gap.solver_tolerance_caveat}};
  return j.dump();
}

MtlSolution task_weighting_train(const TaskSet& tasks, std::size_t j,
                                 const TaskRelation& rel, const TrainSpec& spec,
                                 double eta) {
  tasks.validate();
  rel.validate(tasks.count());
  if (j >= tasks.count())
    throw std::invalid_argument("task_weighting: task index out of range");
  if (!(eta >= 0.0 && eta < 1.0))
    throw std::invalid_argument("task_weighting: eta must be in [0, 1)");
  if (!(spec.lambda > 0.0))
    throw std::invalid_argument("task_weighting: lambda must be > 0");

  Pooled pooled = pool_tasks(tasks, rel.gamma);
  LinearHypothesis h_star = train_weighted(pooled.sample, pooled.weights, spec);

  TrainSpec aux = spec.with_lambda(eta * spec.lambda);
  std::vector<LinearHypothesis> hbar(tasks.count());
  for (std::size_t k = 0; k < tasks.count(); ++k) {
    hbar[k] = train_weighted(tasks.tasks[k], uniform_weights(tasks.tasks[k].size()),
                             aux);
  }
  double reg = eta * spec.lambda;
  auto v_k = [&](std::size_t k, const LinearHypothesis& h) {
    double n = h.norm();
    return task_loss(spec.loss, h, tasks.tasks[k]) + reg * n * n;
  };
  double nabla = 0.0;
  for (std::size_t k = 0; k < tasks.count(); ++k) {
    if (k == j) continue;
    nabla += rel.gamma[k] * (v_k(k, hbar[j]) - v_k(k, hbar[k]));
  }

  MtlSolution sol;
  sol.setting = "task_weighting";
  sol.hypotheses = {h_star};
  sol.gap.nabla = nabla;
  double bound = stacked_sqrt(nabla / (spec.lambda * (1.0 - eta)) +
                              hbar[j].norm() * hbar[j].norm());
  sol.gap.lemma_bound = {bound};
  sol.gap.slack = {bound - h_star.norm()};
  sol.gap.solver_tolerance_caveat = spec.loss.kind != LossKind::squared;
  return sol;
}

namespace {

MtlSolution sharing_squared(const TaskSet& tasks, double lambda0, double lambda) {
  std::size_t k_count = tasks.count();
  std::size_t d = tasks.dim();
  std::size_t dim = (k_count + 1) * d;
  double k_real = static_cast<double>(k_count);

  std::vector<Eigen::MatrixXd> A(k_count);
  std::vector<Eigen::VectorXd> c(k_count);
  for (std::size_t k = 0; k < k_count; ++k) task_moments(tasks.tasks[k], A[k], c[k]);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  auto block = [&](std::size_t r, std::size_t col) {
    return M.block(r * d, col * d, d, d);
  };
  for (std::size_t k = 0; k < k_count; ++k) {
    block(0, 0) += A[k] / k_real;
    block(0, k + 1) = A[k] / k_real;
    block(k + 1, 0) = A[k] / k_real;
    block(k + 1, k + 1) = A[k] / k_real +
                          (lambda / k_real) * Eigen::MatrixXd::Identity(d, d);
    rhs.segment(0, d) += c[k] / k_real;
    rhs.segment((k + 1) * d, d) = c[k] / k_real;
  }
  block(0, 0) += lambda0 * Eigen::MatrixXd::Identity(d, d);

  Eigen::VectorXd z = M.llt().solve(rhs);

  MtlSolution sol;
  sol.shared = LinearHypothesis{
      std::vector<double>(z.data(), z.data() + d)};
  for (std::size_t k = 0; k < k_count; ++k) {
    const double* base = z.data() + (k + 1) * d;
    LinearHypothesis wk{std::vector<double>(base, base + d)};
    LinearHypothesis hk = *sol.shared;
    kernels::axpy(1.0, wk.w.data(), hk.w.data(), d);
    sol.task_components.push_back(std::move(wk));
    sol.hypotheses.push_back(std::move(hk));
  }
  return sol;
}

MtlSolution sharing_alternating(const TaskSet& tasks, double lambda0,
                                double lambda, const TrainSpec& spec) {
  std::size_t k_count = tasks.count();
  std::size_t d = tasks.dim();
  double k_real = static_cast<double>(k_count);

  LinearHypothesis w0{std::vector<double>(d, 0.0)};
  std::vector<LinearHypothesis> wk(k_count,
                                   LinearHypothesis{std::vector<double>(d, 0.0)});
  Pooled pooled = pool_tasks(tasks, std::vector<double>(k_count, 1.0 / k_real));

  std::vector<double> offs;
  auto joint_grad_norm = [&]() {
    // gradient of (1/K) sum_k [L_k(w0+w_k)] + lambda0 ||w0||^2 +
    // (lambda/K) sum_k ||w_k||^2 over the stacked (w0, w_1..w_K)
    std::vector<double> g0(d, 0.0);
    double sq = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const Sample& t = tasks.tasks[k];
      LinearHypothesis hk = w0;
      kernels::axpy(1.0, wk[k].w.data(), hk.w.data(), d);
      std::vector<double> preds(t.size());
      kernels::matvec(t.x_data(), t.size(), t.dim(), hk.w.data(), preds.data());
      std::vector<double> coeff(t.size());
      double scale = 1.0 / (k_real * static_cast<double>(t.size()));
      for (std::size_t i = 0; i < t.size(); ++i) {
        double dp;
        training_loss(spec.loss, preds[i], t.y(i), dp);
        coeff[i] = scale * dp;
      }
      std::vector<double> gk(d, 0.0);
      kernels::matvec_t(t.x_data(), t.size(), t.dim(), coeff.data(), gk.data());
      kernels::axpy(1.0, gk.data(), g0.data(), d);
      kernels::axpy(2.0 * lambda / k_real, wk[k].w.data(), gk.data(), d);
      sq += kernels::dot(gk.data(), gk.data(), d);
    }
    kernels::axpy(2.0 * lambda0, w0.w.data(), g0.data(), d);
    sq += kernels::dot(g0.data(), g0.data(), d);
    return std::sqrt(sq);
  };

  TrainSpec blk = spec;
  int sweeps = std::max(spec.max_iter, 100);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const Sample& t = tasks.tasks[k];
      offs.resize(t.size());
      kernels::matvec(t.x_data(), t.size(), d, w0.w.data(), offs.data());
      blk.lambda = lambda;
      wk[k] = train_weighted_offset(t, uniform_weights(t.size()), blk, offs);
    }
    offs.resize(pooled.sample.size());
    std::size_t pos = 0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const Sample& t = tasks.tasks[k];
      kernels::matvec(t.x_data(), t.size(), d, wk[k].w.data(), offs.data() + pos);
      pos += t.size();
    }
    blk.lambda = lambda0;
    w0 = train_weighted_offset(pooled.sample, pooled.weights, blk, offs);
    if (joint_grad_norm() <= kBlockTolerance) break;
    if (sweep + 1 == sweeps)
      throw SolverError("parameter_sharing: alternating minimization did not "
                        "converge", joint_grad_norm());
  }

  MtlSolution sol;
  sol.shared = w0;
  sol.task_components = wk;
  for (std::size_t k = 0; k < k_count; ++k) {
    LinearHypothesis hk = w0;
    kernels::axpy(1.0, wk[k].w.data(), hk.w.data(), d);
    sol.hypotheses.push_back(std::move(hk));
  }
  return sol;
}

}  // namespace

MtlSolution parameter_sharing_train(const TaskSet& tasks, double lambda0,
                                    double lambda, const TrainSpec& spec) {
  tasks.validate();
  if (!(lambda0 > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("parameter_sharing: lambda0 and lambda must be > 0");
  spec.loss.validate();

  MtlSolution sol = spec.loss.kind == LossKind::squared
                        ? sharing_squared(tasks, lambda0, lambda)
                        : sharing_alternating(tasks, lambda0, lambda, spec);
  sol.setting = "parameter_sharing";

  std::size_t k_count = tasks.count();
  double k_real = static_cast<double>(k_count);
  double lambda_bar = lambda0 * lambda / (lambda0 + lambda);

  std::vector<LinearHypothesis> hbar(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    hbar[k] = train_weighted(tasks.tasks[k],
                             uniform_weights(tasks.tasks[k].size()),
                             spec.with_lambda(lambda_bar));
  }
  Pooled pooled = pool_tasks(tasks, std::vector<double>(k_count, 1.0 / k_real));
  LinearHypothesis h0 =
      train_weighted(pooled.sample, pooled.weights, spec.with_lambda(lambda0));

  double v0 = weighted_loss(spec.loss, h0, pooled.sample, pooled.weights) +
              lambda0 * h0.norm() * h0.norm();
  double sum_vk = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    sum_vk += task_loss(spec.loss, hbar[k], tasks.tasks[k]) +
              lambda_bar * hbar[k].norm() * hbar[k].norm();
  }
  sol.gap.nabla = k_real * v0 - sum_vk;
  sol.gap.solver_tolerance_caveat = spec.loss.kind != LossKind::squared;
  for (std::size_t k = 0; k < k_count; ++k) {
    double bound = stacked_sqrt(sol.gap.nabla / lambda_bar +
                                hbar[k].norm() * hbar[k].norm());
    sol.gap.lemma_bound.push_back(bound);
    sol.gap.slack.push_back(bound - sol.hypotheses[k].norm());
  }
  return sol;
}

namespace {

MtlSolution covariance_squared(const TaskSet& tasks, const CovarianceSpec& cov) {
  std::size_t k_count = tasks.count();
  std::size_t d = tasks.dim();
  std::size_t dim = k_count * d;
  double k_real = static_cast<double>(k_count);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < k_count; ++j) {
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
    task_moments(tasks.tasks[j], A, c);
    M.block(j * d, j * d, d, d) = A / k_real;
    for (std::size_t l = 0; l < k_count; ++l) {
      M.block(j * d, l * d, d, d) +=
          cov.inv(j, l) * Eigen::MatrixXd::Identity(d, d);
    }
    rhs.segment(j * d, d) = c / k_real;
  }
  Eigen::VectorXd z = M.llt().solve(rhs);

  MtlSolution sol;
  for (std::size_t j = 0; j < k_count; ++j) {
    const double* base = z.data() + j * d;
    sol.hypotheses.push_back(LinearHypothesis{std::vector<double>(base, base + d)});
  }
  return sol;
}

MtlSolution covariance_alternating(const TaskSet& tasks,
                                   const CovarianceSpec& cov,
                                   const TrainSpec& spec) {
  std::size_t k_count = tasks.count();
  std::size_t d = tasks.dim();
  double k_real = static_cast<double>(k_count);
  std::vector<LinearHypothesis> h(k_count,
                                  LinearHypothesis{std::vector<double>(d, 0.0)});

  auto block_objective = [&](std::size_t j, std::vector<double> v_j) {
    return [&, j, v_j = std::move(v_j)](const std::vector<double>& x,
                                        std::vector<double>& grad) -> double {
      const Sample& tj = tasks.tasks[j];
      std::vector<double> p(tj.size()), cf(tj.size());
      kernels::matvec(tj.x_data(), tj.size(), d, x.data(), p.data());
      double obj = 0.0;
      double scale = 1.0 / (k_real * static_cast<double>(tj.size()));
      for (std::size_t i = 0; i < tj.size(); ++i) {
        double dp;
        obj += scale * training_loss(spec.loss, p[i], tj.y(i), dp);
        cf[i] = scale * dp;
      }
      grad.assign(d, 0.0);
      kernels::matvec_t(tj.x_data(), tj.size(), d, cf.data(), grad.data());
      obj += cov.inv(j, j) * kernels::dot(x.data(), x.data(), d) +
             kernels::dot(v_j.data(), x.data(), d);
      kernels::axpy(2.0 * cov.inv(j, j), x.data(), grad.data(), d);
      kernels::axpy(1.0, v_j.data(), grad.data(), d);
      return obj;
    };
  };

  auto joint_grad_norm = [&]() {
    double sq = 0.0;
    for (std::size_t j = 0; j < k_count; ++j) {
      const Sample& t = tasks.tasks[j];
      std::vector<double> p(t.size()), cf(t.size());
      kernels::matvec(t.x_data(), t.size(), d, h[j].w.data(), p.data());
      double scale = 1.0 / (k_real * static_cast<double>(t.size()));
      for (std::size_t i = 0; i < t.size(); ++i) {
        double dp;
        training_loss(spec.loss, p[i], t.y(i), dp);
        cf[i] = scale * dp;
      }
      std::vector<double> g(d, 0.0);
      kernels::matvec_t(t.x_data(), t.size(), d, cf.data(), g.data());
      for (std::size_t l = 0; l < k_count; ++l) {
        kernels::axpy(2.0 * cov.inv(j, l), h[l].w.data(), g.data(), d);
      }
      sq += kernels::dot(g.data(), g.data(), d);
    }
    return std::sqrt(sq);
  };

  int sweeps = std::max(spec.max_iter, 100);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t j = 0; j < k_count; ++j) {
      std::vector<double> v_j(d, 0.0);
      for (std::size_t l = 0; l < k_count; ++l) {
        if (l != j) kernels::axpy(2.0 * cov.inv(j, l), h[l].w.data(), v_j.data(), d);
      }
      h[j].w = lbfgs_minimize(block_objective(j, v_j), h[j].w, spec.tolerance,
                              spec.max_iter);
    }
    if (joint_grad_norm() <= kBlockTolerance) break;
    if (sweep + 1 == sweeps)
      throw SolverError("task_covariance: alternating minimization did not "
                        "converge", joint_grad_norm());
  }

  MtlSolution sol;
  sol.hypotheses = h;
  return sol;
}

}  // namespace

MtlSolution task_covariance_train(const TaskSet& tasks,
                                  const CovarianceSpec& cov,
                                  const TrainSpec& spec) {
  tasks.validate();
  if (cov.size() != tasks.count())
    throw std::invalid_argument("task_covariance: Omega size != task count");
  spec.loss.validate();

  MtlSolution sol = spec.loss.kind == LossKind::squared
                        ? covariance_squared(tasks, cov)
                        : covariance_alternating(tasks, cov, spec);
  sol.setting = "task_covariance";

  std::size_t k_count = tasks.count();
  double k_real = static_cast<double>(k_count);
  double reg_k = k_real / cov.sigma_max();

  std::vector<LinearHypothesis> hbar(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    hbar[k] = train_weighted(tasks.tasks[k],
                             uniform_weights(tasks.tasks[k].size()),
                             spec.with_lambda(reg_k));
  }
  Pooled pooled = pool_tasks(tasks, std::vector<double>(k_count, 1.0 / k_real));
  LinearHypothesis h0 = train_weighted(pooled.sample, pooled.weights,
                                       spec.with_lambda(cov.omega_sum()));

  double v0 = weighted_loss(spec.loss, h0, pooled.sample, pooled.weights) +
              cov.omega_sum() * h0.norm() * h0.norm();
  double sum_vk = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    sum_vk += task_loss(spec.loss, hbar[k], tasks.tasks[k]) +
              reg_k * hbar[k].norm() * hbar[k].norm();
  }
  sol.gap.nabla = k_real * v0 - sum_vk;
  sol.gap.solver_tolerance_caveat = spec.loss.kind != LossKind::squared;
  for (std::size_t k = 0; k < k_count; ++k) {
    double bound = stacked_sqrt(cov.sigma_max() * sol.gap.nabla / k_real +
                                hbar[k].norm() * hbar[k].norm());
    sol.gap.lemma_bound.push_back(bound);
    sol.gap.slack.push_back(bound - sol.hypotheses[k].norm());
  }
  return sol;
}

}  // namespace gapmin
