#pragma once

#include <optional>

#include "gapmin/learners.hpp"

namespace gapmin {

struct TaskSet {
  std::vector<Sample> tasks;

  void validate() const;  // K >= 1, uniform dimension
  std::size_t count() const { return tasks.size(); }
  std::size_t dim() const { return tasks.at(0).dim(); }
};

// Task relation coefficients Gamma^j for one fixed j: a point on the
// K-simplex.
struct TaskRelation {
  std::vector<double> gamma;

  static TaskRelation uniform(std::size_t k);
  static TaskRelation one_hot(std::size_t k, std::size_t j);
  void validate(std::size_t k) const;
};

// Symmetric positive-definite task covariance Omega with the derived
// quantities the gap formulas need.
class CovarianceSpec {
 public:
  // omega is row-major K x K
  static CovarianceSpec from_matrix(const std::vector<double>& omega,
                                    std::size_t k);
  // builds the spec directly from Omega^{-1} (row-major K x K SPD)
  static CovarianceSpec from_precision(const std::vector<double>& omega_inv,
                                       std::size_t k);

  std::size_t size() const { return k_; }
  double sigma_max() const { return sigma_max_; }       // largest eigenvalue of Omega
  double omega_sum() const { return omega_sum_; }       // sum of entries of Omega^{-1}
  double inv(std::size_t r, std::size_t c) const { return omega_inv_[r * k_ + c]; }

 private:
  std::size_t k_ = 0;
  std::vector<double> omega_inv_;
  double sigma_max_ = 0.0;
  double omega_sum_ = 0.0;
};

struct MtlGapRecord {
  double nabla = 0.0;
  std::vector<double> lemma_bound;  // per task
  std::vector<double> slack;        // lemma_bound[j] - ||h_j*||
  bool solver_tolerance_caveat = false;
};

struct MtlSolution {
  std::vector<LinearHypothesis> hypotheses;        // h_k* (task weighting: just h_j*)
  std::optional<LinearHypothesis> shared;          // w0 for parameter sharing
  std::vector<LinearHypothesis> task_components;   // w_k for parameter sharing
  MtlGapRecord gap;
  std::string setting;

  std::string to_json() const;
};

// Relation-weighted training: argmin_h sum_k gamma_k (1/N_k) sum_i loss + lambda
// ||h||^2 for task j's simplex. The report carries nabla_j from the per-task
// minimizers of V_k(h) = L_k(h) + eta*lambda*||h||^2 and the bound
// sqrt(nabla_j / (lambda (1-eta)) + ||hbar_j||^2).
MtlSolution task_weighting_train(const TaskSet& tasks, std::size_t j,
                                 const TaskRelation& rel, const TrainSpec& spec,
                                 double eta = 0.0);

// Shared-plus-offset decomposition h_k = w0 + w_k minimizing
// (1/K) sum_k [L_k(w0 + w_k) + lambda0 ||w0||^2 + lambda ||w_k||^2].
// spec supplies the loss and solver settings; regularization comes from
// lambda0 and lambda. Squared loss solves one stacked SPD system; other
// losses run alternating block minimization to gradient tolerance 1e-8.
MtlSolution parameter_sharing_train(const TaskSet& tasks, double lambda0,
                                    double lambda, const TrainSpec& spec);

// Covariance-coupled multitask: argmin (1/K) sum_k L_k(h_k) +
// tr(H^T Omega^{-1} H). Squared loss solves the coupled normal equations.
MtlSolution task_covariance_train(const TaskSet& tasks,
                                  const CovarianceSpec& cov,
                                  const TrainSpec& spec);

}  // namespace gapmin
