#pragma once

#include <utility>

#include "gapmin/learners.hpp"

namespace gapmin {

struct GapReport {
  double nabla_s = 0.0;
  double nabla_t = 0.0;
  double nabla = 0.0;
  double norm_h_s = 0.0;  // hypothesis transfer: norm of the prior <H,Xi>
  double norm_h_t = 0.0;
  double norm_h_star = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double lemma_bound = 0.0;
  double slack = 0.0;  // lemma_bound - norm_h_star
  // set when minimizers come from the iterative solver rather than a closed
  // form, so the inequality only holds up to solver tolerance
  bool solver_tolerance_caveat = false;
  std::string setting;  // "instance_weighting" or "hypothesis_transfer"

  std::string to_json() const;
};

// Performance gap for instance-weighting transfer. V_S(h) = weighted source
// loss + eta*lambda*||h||^2, V_T likewise with the target block; h_S, h_T are
// their minimizers, h* minimizes the full Gamma-weighted objective with
// regularization lambda. gamma sub-vectors are used as given (no
// renormalization), so their sums are unrestricted.
GapReport instance_gap(const Sample& s_t, const Sample& s_s,
                       const WeightVector& gamma, const TrainSpec& spec,
                       double eta = 0.0);

// Loss upper bound B(Gamma) from the gap: hinge 1 + R*m, Lq (Y + R*m)^q with
// m the lemma radical recomputed from the report and inputs.lambda.
double loss_bound(const GapReport& gap, const BoundInputs& inputs,
                  const LossSpec& spec, double label_bound_y = 0.0);

struct Theorem1Terms {
  double gamma_source_l1 = 0.0;
  double gamma_inf = 0.0;
  double gamma_l2_squared = 0.0;
  double beta_bar = 0.0;        // ||Gamma||_inf rho^2 R^2 / lambda
  double delta_bar = 0.0;       // ||Gamma||_2^2 rho^2 R^2 / lambda
  double concentration = 0.0;   // sqrt(N log(1/delta) / 2)
  bool dist_y_available = false;
  double dist_y_term = 0.0;     // ||Gamma_S||_1 * dist_y when available
  // beta_bar + (beta_bar + delta_bar + ||Gamma||_inf B) * concentration,
  // plus dist_y_term when available; the empirical loss term is not included
  double rhs_minus_empirical = 0.0;
};

Theorem1Terms theorem1_terms(const WeightVector& gamma,
                             const BoundInputs& inputs);

struct HypothesisBank {
  std::vector<LinearHypothesis> hypotheses;
  std::vector<double> xi;  // combination weights, unconstrained reals

  static HypothesisBank with_uniform_xi(std::vector<LinearHypothesis> hs);
  void validate() const;
  LinearHypothesis combine() const;  // sum_k xi_k h_k
};

// Biased-regularization transfer: argmin_h mean target loss + lambda *
// ||h - <H,Xi>||^2. The report's nabla uses the minimum-norm unregularized
// target minimizer, exact for squared loss. With exact_gap = true (default)
// a non-squared loss is an error; with false the gap is computed from solver
// minimizers and flagged with the caveat.
std::pair<LinearHypothesis, GapReport> hypothesis_transfer_train(
    const Sample& s_t, const HypothesisBank& bank, const TrainSpec& spec,
    bool exact_gap = true);

}  // namespace gapmin
