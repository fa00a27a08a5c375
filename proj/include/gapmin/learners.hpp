#pragma once

#include <functional>
#include <span>

#include "gapmin/core.hpp"

namespace gapmin {

// Raised when the iterative solver cannot reach the requested gradient
// tolerance within the iteration budget.
struct SolverError : std::runtime_error {
  double gradient_norm;
  SolverError(const std::string& msg, double grad_norm)
      : std::runtime_error(msg), gradient_norm(grad_norm) {}
};

struct TrainSpec {
  LossSpec loss;
  double lambda = 1.0;
  double tolerance = 1e-10;  // on the objective gradient norm
  int max_iter = 10000;

  void validate() const;
  TrainSpec with_lambda(double l) const {
    TrainSpec s = *this;
    s.lambda = l;
    return s;
  }
};

// argmin_h sum_i weights[i] * loss(<h,x_i> , y_i) + lambda * ||h||_2^2.
// Weights are nonnegative and need not sum to 1. Squared loss is solved in
// closed form from the regularized normal equations; logistic, smoothed
// hinge, and Lq (q >= 2) run a deterministic full-batch L-BFGS to the
// gradient tolerance. lambda = 0 is accepted for squared loss only and
// returns the minimum-norm least-squares solution.
LinearHypothesis train_weighted(const Sample& s, std::span<const double> weights,
                                const TrainSpec& spec);

// Same objective with per-example prediction offsets:
// sum_i weights[i] * loss(<h,x_i> + offsets[i], y_i) + lambda * ||h||_2^2.
// Used by biased-regularization and shared-parameter solvers.
LinearHypothesis train_weighted_offset(const Sample& s,
                                       std::span<const double> weights,
                                       const TrainSpec& spec,
                                       std::span<const double> offsets);

// Weighted 0-1 error with the sign(0) = +1 convention. Weights must sum to 1.
double weighted_error_01(const LinearHypothesis& h, const Sample& s,
                         std::span<const double> weights);

struct RegressionError {
  double eps = 0.0;           // sum_i w_i |res_i| / max_error
  double max_error = 0.0;     // E_k, unweighted max absolute residual
  bool perfect_fit = false;   // max_error == 0; eps is meaningless then
};

// Weighted normalized absolute error. Weights must sum to 1.
RegressionError weighted_error_regression(const LinearHypothesis& h,
                                          const Sample& s,
                                          std::span<const double> weights);

// sum_i weights[i] * loss(<h,x_i>, y_i), no regularizer. Weights unrestricted
// in sum (gap computations pass raw sub-vectors).
double weighted_loss(const LossSpec& loss, const LinearHypothesis& h,
                     const Sample& s, std::span<const double> weights);

// Value and d/d(pred) of the surrogate the solvers minimize. Matches
// loss_value except for hinge, which is quadratically smoothed at the kink.
// Throws for losses train_weighted refuses.
double training_loss(const LossSpec& loss, double pred, double y, double& dpred);

// Generic deterministic L-BFGS used by the smooth-loss paths and the
// multitask solvers. fn must fill grad and return the objective value.
using ObjectiveFn =
    std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
std::vector<double> lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                                   double tolerance, int max_iter);

}  // namespace gapmin
