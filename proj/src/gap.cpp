#include "gapmin/gap.hpp"

#include <cmath>

#include "gapmin/kernels.hpp"
#include "nlohmann/json.hpp"

namespace gapmin {

namespace {

double lemma1_radical(double nabla, double lambda, double eta, double norm_h_s,
                      double norm_h_t) {
  double radicand = nabla / (2.0 * lambda * (1.0 - 2.0 * eta)) +
                    0.5 * (norm_h_s * norm_h_s + norm_h_t * norm_h_t);
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace

std::string GapReport::to_json() const {
  nlohmann::json j;
  j["nabla_s"] = nabla_s;
  j["nabla_t"] = nabla_t;
  j["nabla"] = nabla;
  j["norm_h_s"] = norm_h_s;
  j["norm_h_t"] = norm_h_t;
  j["norm_h_star"] = norm_h_star;
  j["eta"] = eta;
  j["lambda"] = lambda;
  j["lemma_bound"] = lemma_bound;
  j["slack"] = slack;
  j["solver_tolerance_caveat"] = solver_tolerance_caveat;
  j["setting"] = setting;
  return j.dump();
}

GapReport instance_gap(const Sample& s_t, const Sample& s_s,
                       const WeightVector& gamma, const TrainSpec& spec,
                       double eta) {
  if (!(eta >= 0.0 && eta < 0.5))
    throw std::invalid_argument("instance_gap: eta must be in [0, 0.5)");
  if (!(spec.lambda > 0.0))
    throw std::invalid_argument("instance_gap: lambda must be > 0");
  if (s_t.dim() != s_s.dim())
    throw std::invalid_argument("instance_gap: sample dimensions differ");
  if (gamma.target.size() != s_t.size() || gamma.source.size() != s_s.size())
    throw std::invalid_argument("instance_gap: weight lengths do not match samples");

  TrainSpec aux = spec.with_lambda(eta * spec.lambda);
  LinearHypothesis h_s = train_weighted(s_s, gamma.source, aux);
  LinearHypothesis h_t = train_weighted(s_t, gamma.target, aux);

  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> full = gamma.combined();
  LinearHypothesis h_star = train_weighted(joint, full, spec);

  double reg = eta * spec.lambda;
  auto v_of = [&](const Sample& s, const std::vector<double>& w,
                  const LinearHypothesis& h) {
    double n = h.norm();
    return weighted_loss(spec.loss, h, s, w) + reg * n * n;
  };
  double v_s_at_t = v_of(s_s, gamma.source, h_t);
  double v_s_at_s = v_of(s_s, gamma.source, h_s);
  double v_t_at_s = v_of(s_t, gamma.target, h_s);
  double v_t_at_t = v_of(s_t, gamma.target, h_t);

  GapReport r;
  r.nabla_s = v_s_at_t - v_s_at_s;
  r.nabla_t = v_t_at_s - v_t_at_t;
  r.nabla = r.nabla_s + r.nabla_t;
  r.norm_h_s = h_s.norm();
  r.norm_h_t = h_t.norm();
  r.norm_h_star = h_star.norm();
  r.eta = eta;
  r.lambda = spec.lambda;
  r.lemma_bound = lemma1_radical(r.nabla, spec.lambda, eta, r.norm_h_s, r.norm_h_t);
  r.slack = r.lemma_bound - r.norm_h_star;
  r.solver_tolerance_caveat = spec.loss.kind != LossKind::squared;
  r.setting = "instance_weighting";
  return r;
}

double loss_bound(const GapReport& gap, const BoundInputs& inputs,
                  const LossSpec& spec, double label_bound_y) {
  inputs.validate();
  double m = lemma1_radical(gap.nabla, inputs.lambda, gap.eta, gap.norm_h_s,
                            gap.norm_h_t);
  switch (spec.kind) {
    case LossKind::hinge:
      return 1.0 + inputs.radius * m;
    case LossKind::lq:
      if (!(label_bound_y >= 0.0))
        throw std::invalid_argument("loss_bound: Lq needs label bound Y >= 0");
      return std::pow(label_bound_y + inputs.radius * m, spec.q);
    default:
      throw std::invalid_argument("loss_bound: only hinge and Lq losses have "
                                  "closed-form bounds");
  }
}

Theorem1Terms theorem1_terms(const WeightVector& gamma,
                             const BoundInputs& inputs) {
  inputs.validate();
  gamma.require_normalized();
  Theorem1Terms t;
  t.gamma_source_l1 = gamma.source_l1();
  t.gamma_inf = gamma.linf();
  t.gamma_l2_squared = gamma.l2_squared();
  double rr = inputs.rho * inputs.rho * inputs.radius * inputs.radius;
  t.beta_bar = t.gamma_inf * rr / inputs.lambda;
  t.delta_bar = t.gamma_l2_squared * rr / inputs.lambda;
  double n = static_cast<double>(gamma.size());
  t.concentration = std::sqrt(n * std::log(1.0 / inputs.delta) / 2.0);
  t.rhs_minus_empirical =
      t.beta_bar + (t.beta_bar + t.delta_bar + t.gamma_inf * inputs.loss_bound_b) *
                       t.concentration;
  if (inputs.dist_y) {
    t.dist_y_available = true;
    t.dist_y_term = t.gamma_source_l1 * *inputs.dist_y;
    t.rhs_minus_empirical += t.dist_y_term;
  }
  return t;
}

HypothesisBank HypothesisBank::with_uniform_xi(
    std::vector<LinearHypothesis> hs) {
  HypothesisBank b;
  b.xi.assign(hs.size(), hs.empty() ? 0.0 : 1.0 / static_cast<double>(hs.size()));
  b.hypotheses = std::move(hs);
  return b;
}

void HypothesisBank::validate() const {
  if (hypotheses.empty())
    throw std::invalid_argument("HypothesisBank: empty bank");
  if (xi.size() != hypotheses.size())
    throw std::invalid_argument("HypothesisBank: xi length != bank size");
  std::size_t d = hypotheses[0].dim();
  for (const auto& h : hypotheses) {
    if (h.dim() != d)
      throw std::invalid_argument("HypothesisBank: mixed dimensions");
  }
  for (double v : xi) {
    if (!std::isfinite(v))
      throw std::invalid_argument("HypothesisBank: non-finite xi");
  }
}

LinearHypothesis HypothesisBank::combine() const {
  validate();
  std::size_t d = hypotheses[0].dim();
  LinearHypothesis out{std::vector<double>(d, 0.0)};
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    kernels::axpy(xi[k], hypotheses[k].w.data(), out.w.data(), d);
  }
  return out;
}

std::pair<LinearHypothesis, GapReport> hypothesis_transfer_train(
    const Sample& s_t, const HypothesisBank& bank, const TrainSpec& spec,
    bool exact_gap) {
  bank.validate();
  if (bank.hypotheses[0].dim() != s_t.dim())
    throw std::invalid_argument("hypothesis_transfer: bank dimension mismatch");
  if (!(spec.lambda > 0.0))
    throw std::invalid_argument("hypothesis_transfer: lambda must be > 0");
  bool squared = spec.loss.kind == LossKind::squared;
  if (exact_gap && !squared)
    throw std::invalid_argument(
        "hypothesis_transfer: exact gap needs squared loss (unregularized "
        "minimizer has no closed form otherwise)");

  LinearHypothesis prior = bank.combine();
  std::size_t n = s_t.size();
  std::size_t d = s_t.dim();
  std::vector<double> uniform(n, 1.0 / static_cast<double>(n));

  // substitute g = h - prior; the objective becomes a plain ridge problem in
  // g with predictions offset by <prior, x>
  std::vector<double> offsets(n);
  kernels::matvec(s_t.x_data(), n, d, prior.w.data(), offsets.data());
  LinearHypothesis g = train_weighted_offset(s_t, uniform, spec, offsets);
  LinearHypothesis h_star = prior;
  kernels::axpy(1.0, g.w.data(), h_star.w.data(), d);

  // unregularized target minimizer: exact minimum-norm solution for squared
  // loss, a vanishing-ridge proxy for the smooth losses (which refuse
  // lambda = 0); the caveat flag already marks that path as approximate
  LinearHypothesis h_t =
      train_weighted(s_t, uniform, spec.with_lambda(squared ? 0.0 : 1e-12));

  auto mean_loss = [&](const LinearHypothesis& h) {
    return weighted_loss(spec.loss, h, s_t, uniform);
  };
  GapReport r;
  r.nabla = mean_loss(prior) - mean_loss(h_t);
  r.nabla_t = r.nabla;
  r.nabla_s = 0.0;
  r.norm_h_s = prior.norm();
  r.norm_h_t = h_t.norm();
  r.norm_h_star = h_star.norm();
  r.eta = 0.0;
  r.lambda = spec.lambda;
  r.lemma_bound = std::sqrt(std::max(r.nabla, 0.0) / spec.lambda) + r.norm_h_s;
  r.slack = r.lemma_bound - r.norm_h_star;
  r.solver_tolerance_caveat = !squared;
  r.setting = "hypothesis_transfer";
  if (!r.solver_tolerance_caveat && r.slack < -1e-6)
    throw InvariantViolation("hypothesis_transfer: norm bound violated");
  return {std::move(h_star), std::move(r)};
}

}  // namespace gapmin
