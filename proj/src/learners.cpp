#include "gapmin/learners.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gapmin/kernels.hpp"

namespace gapmin {

namespace {

// smoothing width of the quadratic hinge surrogate used for training
constexpr double kHingeSmoothing = 1e-6;

void check_weights(const Sample& s, std::span<const double> weights) {
  if (weights.size() != s.size())
    throw std::invalid_argument("train: weights length != sample size");
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("train: weights must be finite and >= 0");
  }
}

// loss value and derivative in the prediction, for the smooth training losses
double smooth_loss(const LossSpec& spec, double pred, double y, double& dpred) {
  switch (spec.kind) {
    case LossKind::logistic: {
      double m = y * pred;
      dpred = -y / (1.0 + std::exp(m));
      return std::max(-m, 0.0) + std::log1p(std::exp(-std::fabs(m)));
    }
    case LossKind::hinge: {
      double m = y * pred;
      if (m >= 1.0) {
        dpred = 0.0;
        return 0.0;
      }
      if (m <= 1.0 - kHingeSmoothing) {
        dpred = -y;
        return 1.0 - m - 0.5 * kHingeSmoothing;
      }
      double gap = 1.0 - m;
      dpred = -y * gap / kHingeSmoothing;
      return gap * gap / (2.0 * kHingeSmoothing);
    }
    case LossKind::lq: {
      double r = pred - y;
      double a = std::fabs(r);
      dpred = r == 0.0 ? 0.0 : spec.q * std::pow(a, spec.q - 1.0) * (r > 0 ? 1.0 : -1.0);
      return std::pow(a, spec.q);
    }
    default:
      throw std::invalid_argument("smooth_loss: unsupported loss kind");
  }
}

bool trainable_smooth(const LossSpec& spec) {
  if (spec.kind == LossKind::logistic || spec.kind == LossKind::hinge) return true;
  return spec.kind == LossKind::lq && spec.q >= 2.0;
}

LinearHypothesis solve_squared(const Sample& s, std::span<const double> weights,
                               double lambda, std::span<const double> offsets) {
  std::size_t n = s.size();
  std::size_t d = s.dim();
  if (lambda > 0.0) {
    std::vector<double> G(d * d, 0.0);
    std::vector<double> b(d, 0.0);
    std::vector<double> wy(n);
    for (std::size_t i = 0; i < n; ++i) {
      double target = s.y(i) - (offsets.empty() ? 0.0 : offsets[i]);
      wy[i] = weights[i] * target;
    }
    kernels::weighted_gram(s.x_data(), n, d, weights.data(), wy.data(), G.data(),
                           b.data());
    Eigen::Map<Eigen::MatrixXd> Gm(G.data(), d, d);
    Eigen::Map<Eigen::VectorXd> bm(b.data(), d);
    Eigen::MatrixXd A = Gm + lambda * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd h = A.llt().solve(bm);
    return LinearHypothesis{std::vector<double>(h.data(), h.data() + d)};
  }
  // unregularized: minimum-norm least squares on the sqrt-weighted design
  Eigen::MatrixXd A(n, d);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sw = std::sqrt(weights[i]);
    auto xi = s.x(i);
    for (std::size_t j = 0; j < d; ++j) A(i, j) = sw * xi[j];
    rhs(i) = sw * (s.y(i) - (offsets.empty() ? 0.0 : offsets[i]));
  }
  Eigen::VectorXd h = A.completeOrthogonalDecomposition().solve(rhs);
  return LinearHypothesis{std::vector<double>(h.data(), h.data() + d)};
}

LinearHypothesis solve_smooth(const Sample& s, std::span<const double> weights,
                              const TrainSpec& spec,
                              std::span<const double> offsets) {
  std::size_t n = s.size();
  std::size_t d = s.dim();
  std::vector<double> preds(n);
  std::vector<double> coeff(n);
  ObjectiveFn fn = [&](const std::vector<double>& h, std::vector<double>& grad) {
    kernels::matvec(s.x_data(), n, d, h.data(), preds.data());
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double p = preds[i] + (offsets.empty() ? 0.0 : offsets[i]);
      double dp;
      obj += weights[i] * smooth_loss(spec.loss, p, s.y(i), dp);
      coeff[i] = weights[i] * dp;
    }
    grad.assign(d, 0.0);
    kernels::matvec_t(s.x_data(), n, d, coeff.data(), grad.data());
    if (spec.lambda != 0.0) {
      kernels::axpy(2.0 * spec.lambda, h.data(), grad.data(), d);
      obj += spec.lambda * kernels::dot(h.data(), h.data(), d);
    }
    return obj;
  };
  std::vector<double> h0(d, 0.0);
  std::vector<double> h =
      lbfgs_minimize(fn, std::move(h0), spec.tolerance, spec.max_iter);
  return LinearHypothesis{std::move(h)};
}

LinearHypothesis train_impl(const Sample& s, std::span<const double> weights,
                            const TrainSpec& spec,
                            std::span<const double> offsets) {
  check_weights(s, weights);
  spec.loss.validate();
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
    throw std::invalid_argument("train: lambda must be finite and >= 0");
  if (!offsets.empty() && offsets.size() != s.size())
    throw std::invalid_argument("train: offsets length != sample size");
  if (spec.loss.kind == LossKind::squared)
    return solve_squared(s, weights, spec.lambda, offsets);
  if (!trainable_smooth(spec.loss))
    throw std::invalid_argument("train: " + spec.loss.kind_name() +
                                " loss is not supported for training "
                                "(non-smooth objective)");
  if (spec.lambda == 0.0)
    throw std::invalid_argument("train: lambda = 0 requires squared loss");
  return solve_smooth(s, weights, spec, offsets);
}

}  // namespace

void TrainSpec::validate() const {
  loss.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("TrainSpec: lambda must be > 0");
  if (!(tolerance > 0.0))
    throw std::invalid_argument("TrainSpec: tolerance must be > 0");
  if (max_iter < 1) throw std::invalid_argument("TrainSpec: max_iter must be >= 1");
}

LinearHypothesis train_weighted(const Sample& s, std::span<const double> weights,
                                const TrainSpec& spec) {
  return train_impl(s, weights, spec, {});
}

LinearHypothesis train_weighted_offset(const Sample& s,
                                       std::span<const double> weights,
                                       const TrainSpec& spec,
                                       std::span<const double> offsets) {
  return train_impl(s, weights, spec, offsets);
}

double weighted_error_01(const LinearHypothesis& h, const Sample& s,
                         std::span<const double> weights) {
  check_weights(s, weights);
  double total = kernels::sum(weights.data(), weights.size());
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("weighted_error: weights must sum to 1");
  std::vector<double> preds;
  predict_all(h, s, preds);
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (sign(preds[i]) != s.y(i)) err += weights[i];
  }
  return err;
}

RegressionError weighted_error_regression(const LinearHypothesis& h,
                                          const Sample& s,
                                          std::span<const double> weights) {
  check_weights(s, weights);
  double total = kernels::sum(weights.data(), weights.size());
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("weighted_error: weights must sum to 1");
  std::vector<double> preds;
  predict_all(h, s, preds);
  RegressionError out;
  out.max_error =
      kernels::max_abs_diff(preds.data(), s.labels().data(), s.size());
  if (out.max_error == 0.0) {
    out.perfect_fit = true;
    return out;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += weights[i] * std::fabs(preds[i] - s.y(i));
  }
  out.eps = acc / out.max_error;
  return out;
}

double training_loss(const LossSpec& loss, double pred, double y, double& dpred) {
  if (loss.kind == LossKind::squared) {
    double r = pred - y;
    dpred = 2.0 * r;
    return r * r;
  }
  if (!trainable_smooth(loss))
    throw std::invalid_argument("training_loss: " + loss.kind_name() +
                                " loss is not supported for training");
  return smooth_loss(loss, pred, y, dpred);
}

double weighted_loss(const LossSpec& loss, const LinearHypothesis& h,
                     const Sample& s, std::span<const double> weights) {
  check_weights(s, weights);
  std::vector<double> preds;
  predict_all(h, s, preds);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (weights[i] != 0.0) acc += weights[i] * loss_value(loss, preds[i], s.y(i));
  }
  return acc;
}

std::vector<double> lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                                   double tolerance, int max_iter) {
  const std::size_t n = x0.size();
  const int history = 10;
  const double c1 = 1e-4;

  std::vector<double> x = std::move(x0);
  std::vector<double> g(n), g_new(n), d(n), x_new(n);
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist;

  double f = fn(x, g);
  for (int iter = 0; iter < max_iter; ++iter) {
    double gnorm = std::sqrt(kernels::dot(g.data(), g.data(), n));
    if (gnorm <= tolerance) return x;

    // two-loop recursion
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * kernels::dot(s_hist[i].data(), d.data(), n);
      kernels::axpy(-alpha[i], y_hist[i].data(), d.data(), n);
    }
    if (!s_hist.empty()) {
      const auto& sv = s_hist.back();
      const auto& yv = y_hist.back();
      double gamma = kernels::dot(sv.data(), yv.data(), n) /
                     kernels::dot(yv.data(), yv.data(), n);
      kernels::scale(d.data(), gamma, n);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * kernels::dot(y_hist[i].data(), d.data(), n);
      kernels::axpy(alpha[i] - beta, s_hist[i].data(), d.data(), n);
    }
    kernels::scale(d.data(), -1.0, n);

    double dg = kernels::dot(d.data(), g.data(), n);
    if (dg >= 0.0) {  // not a descent direction; restart from steepest descent
      d = g;
      kernels::scale(d.data(), -1.0, n);
      dg = -kernels::dot(g.data(), g.data(), n);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // backtracking Armijo line search; accepts rounding-level non-increase
    // so the last digits of convergence are not blocked by fp noise
    double t = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + t * d[j];
      f_new = fn(x_new, g_new);
      if (f_new <= f + c1 * t * dg ||
          f_new <= f + 1e-15 * std::fabs(f)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) throw SolverError("solver: line search failed", gnorm);

    std::vector<double> sv(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      sv[j] = x_new[j] - x[j];
      yv[j] = g_new[j] - g[j];
    }
    double sy = kernels::dot(sv.data(), yv.data(), n);
    if (sy > 1e-16) {
      s_hist.push_back(std::move(sv));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > history) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
  }
  double gnorm = std::sqrt(kernels::dot(g.data(), g.data(), n));
  if (gnorm <= tolerance) return x;
  throw SolverError("solver: no convergence within max iterations", gnorm);
}

}  // namespace gapmin
