#include "gapmin/boosting.hpp"

#include <cmath>
#include <cstdio>

#include "gapmin/kernels.hpp"
#include "nlohmann/json.hpp"

namespace gapmin {

namespace {

double vec_max(const std::vector<double>& v, double acc = 0.0) {
  for (double w : v) acc = std::max(acc, w);
  return acc;
}

std::vector<double> renormalized(const std::vector<double>& w, const char* what) {
  double total = kernels::sum(w.data(), w.size());
  if (!(total > 0.0) || !std::isfinite(total))
    throw InvariantViolation(std::string("boost: ") + what +
                             " weight mass vanished");
  std::vector<double> out(w);
  kernels::scale(out.data(), 1.0 / total, out.size());
  return out;
}

std::vector<double> join_weights(const std::vector<double>& dt,
                                 const std::vector<double>& ds) {
  std::vector<double> all;
  all.reserve(dt.size() + ds.size());
  all.insert(all.end(), dt.begin(), dt.end());
  all.insert(all.end(), ds.begin(), ds.end());
  return all;
}

struct ClipStats {
  double z_preclip = 0.0;
  double max_preclip = 0.0;
  int clipped = 0;
  double norm_total = 0.0;
};

// cap at gamma_max * Z computed from the pre-clip sum, then normalize to 1
ClipStats clip_and_normalize(std::vector<double>& dt, std::vector<double>& ds,
                             double gamma_max) {
  ClipStats st;
  st.z_preclip = kernels::sum(dt.data(), dt.size()) +
                 kernels::sum(ds.data(), ds.size());
  st.max_preclip = vec_max(ds, vec_max(dt));
  if (!(st.z_preclip > 0.0) || !std::isfinite(st.z_preclip))
    throw InvariantViolation("boost: weight mass vanished");
  double cap = gamma_max * st.z_preclip;
  auto clip = [&](std::vector<double>& v) {
    for (double& w : v) {
      if (w > cap) {
        w = cap;
        ++st.clipped;
      }
    }
  };
  clip(dt);
  clip(ds);
  st.norm_total = kernels::sum(dt.data(), dt.size()) +
                  kernels::sum(ds.data(), ds.size());
  kernels::scale(dt.data(), 1.0 / st.norm_total, dt.size());
  kernels::scale(ds.data(), 1.0 / st.norm_total, ds.size());
  return st;
}

void finish_record(RoundRecord& rec, const ClipStats& st,
                   const std::vector<double>& dt,
                   const std::vector<double>& ds) {
  rec.z_preclip = st.z_preclip;
  rec.max_weight_preclip = st.max_preclip;
  rec.clipped = st.clipped;
  rec.norm_total = st.norm_total;
  rec.max_weight = vec_max(ds, vec_max(dt));
  rec.source_mass = kernels::sum(ds.data(), ds.size());
}

void check_pair(const Sample& s_s, const Sample& s_t) {
  if (s_s.size() == 0 || s_t.size() == 0)
    throw std::invalid_argument("boost: empty domain sample");
  if (s_s.dim() != s_t.dim())
    throw std::invalid_argument("boost: source/target dimension mismatch");
}

double round_alpha(double& eps, double floor) {
  if (eps <= 0.0) eps = floor;
  return std::log((1.0 - eps) / eps);
}

// shrink alphas to sum 1 (regression combination rule)
void normalize_alphas(Ensemble& e) {
  double total = 0.0;
  for (const auto& m : e.members) total += m.alpha;
  if (total <= 0.0) return;
  for (auto& m : e.members) m.alpha /= total;
}

}  // namespace

void BoostConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("BoostConfig: rounds must be >= 1");
  if (!(gamma_max > 0.0 && gamma_max <= 1.0))
    throw std::invalid_argument("BoostConfig: gamma_max must be in (0, 1]");
  if (!(epsilon_floor > 0.0 && epsilon_floor < 0.5))
    throw std::invalid_argument("BoostConfig: epsilon_floor must be in (0, 0.5)");
  if (!std::isfinite(rho_s) || !std::isfinite(rho_t))
    throw std::invalid_argument("BoostConfig: rho values must be finite");
  if (rho_s > 0.0) throw std::invalid_argument("BoostConfig: rho_s must be <= 0");
  if (agreement_bonus) {
    if (mode != TaskMode::classification)
      throw std::invalid_argument(
          "BoostConfig: agreement bonus applies to classification only");
    if (rho_t < 0.0)
      throw std::invalid_argument(
          "BoostConfig: agreement bonus requires rho_t >= 0");
  } else {
    if (rho_t > 0.0)
      throw std::invalid_argument("BoostConfig: rho_t must be <= 0");
    if (rho_s > rho_t)
      throw std::invalid_argument("BoostConfig: rho_s must be <= rho_t");
  }
  base.validate();
}

BoostResult gap_boost(const Sample& s_s, const Sample& s_t,
                      const BoostConfig& cfg) {
  cfg.validate();
  if (cfg.mode != TaskMode::classification)
    throw std::invalid_argument("gap_boost: config mode must be classification");
  check_pair(s_s, s_t);
  if (!s_s.labels_are_signs() || !s_t.labels_are_signs())
    throw std::invalid_argument("gap_boost: labels must be -1 or +1");

  std::size_t nt = s_t.size();
  std::size_t ns = s_s.size();
  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> dt(nt, 1.0 / static_cast<double>(nt + ns));
  std::vector<double> ds(ns, 1.0 / static_cast<double>(nt + ns));

  BoostResult out;
  out.ensemble.mode = TaskMode::classification;
  out.trace.stop_reason = "completed";

  std::vector<double> jp, sp, tp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(joint, dall, cfg.base);
    LinearHypothesis hs = train_weighted(s_s, renormalized(ds, "source"), cfg.base);
    LinearHypothesis ht = train_weighted(s_t, renormalized(dt, "target"), cfg.base);

    double eps = weighted_error_01(h, joint, dall);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    predict_all(h, joint, jp);
    predict_all(hs, joint, sp);
    predict_all(ht, joint, tp);
    for (std::size_t i = 0; i < nt; ++i) {
      bool mistake = sign(jp[i]) != joint.y(i);
      bool disagree = sign(sp[i]) != sign(tp[i]);
      bool hit = cfg.agreement_bonus ? !disagree : disagree;
      double b = (hit ? cfg.rho_t : 0.0) + (mistake ? alpha : 0.0);
      dt[i] *= std::exp(b);
    }
    for (std::size_t i = 0; i < ns; ++i) {
      std::size_t row = nt + i;
      bool mistake = sign(jp[row]) != joint.y(row);
      bool disagree = sign(sp[row]) != sign(tp[row]);
      double b = (disagree ? cfg.rho_s : 0.0) + (mistake ? alpha : 0.0);
      ds[i] *= std::exp(b);
    }
    ClipStats st = clip_and_normalize(dt, ds, cfg.gamma_max);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  return out;
}

BoostResult gap_boost_r(const Sample& s_s, const Sample& s_t,
                        const BoostConfig& cfg) {
  cfg.validate();
  if (cfg.mode != TaskMode::regression)
    throw std::invalid_argument("gap_boost_r: config mode must be regression");
  check_pair(s_s, s_t);

  std::size_t nt = s_t.size();
  std::size_t ns = s_s.size();
  std::size_t n = nt + ns;
  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> dt(nt, 1.0 / static_cast<double>(n));
  std::vector<double> ds(ns, 1.0 / static_cast<double>(n));

  BoostResult out;
  out.ensemble.mode = TaskMode::regression;
  out.trace.stop_reason = "completed";

  std::vector<double> jp, sp, tp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(joint, dall, cfg.base);
    LinearHypothesis hs = train_weighted(s_s, renormalized(ds, "source"), cfg.base);
    LinearHypothesis ht = train_weighted(s_t, renormalized(dt, "target"), cfg.base);

    predict_all(h, joint, jp);
    double e_max = kernels::max_abs_diff(jp.data(), joint.labels().data(), n);
    if (e_max == 0.0) {
      // perfect fit: record this learner with the floored-error alpha and stop
      double eps = cfg.epsilon_floor;
      double alpha = std::log((1.0 - eps) / eps);
      RoundRecord rec;
      rec.k = k;
      rec.epsilon = eps;
      rec.alpha = alpha;
      rec.weights = WeightVector(dt, ds);
      ClipStats st;
      st.z_preclip = kernels::sum(dt.data(), nt) + kernels::sum(ds.data(), ns);
      st.max_preclip = vec_max(ds, vec_max(dt));
      st.norm_total = st.z_preclip;
      finish_record(rec, st, dt, ds);
      out.trace.rounds.push_back(std::move(rec));
      out.ensemble.members.push_back({alpha, std::move(h)});
      out.trace.truncated = true;
      out.trace.stop_reason = "perfect_fit";
      break;
    }

    std::vector<double> eps_i(n);
    for (std::size_t i = 0; i < n; ++i)
      eps_i[i] = std::fabs(jp[i] - joint.y(i)) / e_max;
    double eps = kernels::dot(dall.data(), eps_i.data(), n);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    predict_all(hs, joint, sp);
    predict_all(ht, joint, tp);
    double e_t = 0.0, e_s = 0.0;
    for (std::size_t i = 0; i < nt; ++i)
      e_t = std::max(e_t, std::fabs(sp[i] - tp[i]));
    for (std::size_t i = nt; i < n; ++i)
      e_s = std::max(e_s, std::fabs(sp[i] - tp[i]));
    for (std::size_t i = 0; i < nt; ++i) {
      double kappa = e_t > 0.0 ? std::fabs(sp[i] - tp[i]) / e_t : 0.0;
      dt[i] *= std::exp(cfg.rho_t * kappa + alpha * eps_i[i]);
    }
    for (std::size_t i = 0; i < ns; ++i) {
      std::size_t row = nt + i;
      double kappa = e_s > 0.0 ? std::fabs(sp[row] - tp[row]) / e_s : 0.0;
      ds[i] *= std::exp(cfg.rho_s * kappa + alpha * eps_i[row]);
    }
    ClipStats st = clip_and_normalize(dt, ds, cfg.gamma_max);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  normalize_alphas(out.ensemble);
  return out;
}

namespace {

// house AdaBoost over a pooled sample whose first nt rows are the target
// block; no clipping, no auxiliary learners
BoostResult plain_adaboost(const Sample& pool, std::size_t nt,
                           const BoostConfig& cfg) {
  std::size_t n = pool.size();
  std::vector<double> dt(nt, 1.0 / static_cast<double>(n));
  std::vector<double> ds(n - nt, 1.0 / static_cast<double>(n));

  BoostResult out;
  out.ensemble.mode = TaskMode::classification;
  out.trace.stop_reason = "completed";

  std::vector<double> jp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(pool, dall, cfg.base);
    double eps = weighted_error_01(h, pool, dall);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    predict_all(h, pool, jp);
    for (std::size_t i = 0; i < nt; ++i) {
      if (sign(jp[i]) != pool.y(i)) dt[i] *= std::exp(alpha);
    }
    for (std::size_t i = nt; i < n; ++i) {
      if (sign(jp[i]) != pool.y(i)) ds[i - nt] *= std::exp(alpha);
    }
    ClipStats st = clip_and_normalize(dt, ds, 1.0);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  return out;
}

// house AdaBoost.R2 (absolute error, alpha-weighted-mean combination)
BoostResult plain_adaboost_r2(const Sample& pool, std::size_t nt,
                              const BoostConfig& cfg) {
  std::size_t n = pool.size();
  std::vector<double> dt(nt, 1.0 / static_cast<double>(n));
  std::vector<double> ds(n - nt, 1.0 / static_cast<double>(n));

  BoostResult out;
  out.ensemble.mode = TaskMode::regression;
  out.trace.stop_reason = "completed";

  std::vector<double> jp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(pool, dall, cfg.base);
    predict_all(h, pool, jp);
    double e_max = kernels::max_abs_diff(jp.data(), pool.labels().data(), n);
    if (e_max == 0.0) {
      double eps = cfg.epsilon_floor;
      double alpha = std::log((1.0 - eps) / eps);
      RoundRecord rec;
      rec.k = k;
      rec.epsilon = eps;
      rec.alpha = alpha;
      rec.weights = WeightVector(dt, ds);
      ClipStats st;
      st.z_preclip = kernels::sum(dt.data(), dt.size()) +
                     kernels::sum(ds.data(), ds.size());
      st.max_preclip = vec_max(ds, vec_max(dt));
      st.norm_total = st.z_preclip;
      finish_record(rec, st, dt, ds);
      out.trace.rounds.push_back(std::move(rec));
      out.ensemble.members.push_back({alpha, std::move(h)});
      out.trace.truncated = true;
      out.trace.stop_reason = "perfect_fit";
      break;
    }
    std::vector<double> eps_i(n);
    for (std::size_t i = 0; i < n; ++i)
      eps_i[i] = std::fabs(jp[i] - pool.y(i)) / e_max;
    double eps = kernels::dot(dall.data(), eps_i.data(), n);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    for (std::size_t i = 0; i < nt; ++i) dt[i] *= std::exp(alpha * eps_i[i]);
    for (std::size_t i = nt; i < n; ++i)
      ds[i - nt] *= std::exp(alpha * eps_i[i]);
    ClipStats st = clip_and_normalize(dt, ds, 1.0);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  normalize_alphas(out.ensemble);
  return out;
}

BoostResult tradaboost(const Sample& s_s, const Sample& s_t,
                       const BoostConfig& cfg) {
  std::size_t nt = s_t.size();
  std::size_t ns = s_s.size();
  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> dt(nt, 1.0 / static_cast<double>(nt + ns));
  std::vector<double> ds(ns, 1.0 / static_cast<double>(nt + ns));
  double factor = tradaboost_source_factor(ns, cfg.rounds);

  BoostResult out;
  out.ensemble.mode = TaskMode::classification;
  out.trace.stop_reason = "completed";

  std::vector<double> jp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(joint, dall, cfg.base);
    // round error judged on the target block only
    double eps = weighted_error_01(h, s_t, renormalized(dt, "target"));
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    predict_all(h, joint, jp);
    for (std::size_t i = 0; i < nt; ++i) {
      if (sign(jp[i]) != joint.y(i)) dt[i] *= std::exp(alpha);
    }
    for (std::size_t i = 0; i < ns; ++i) {
      if (sign(jp[nt + i]) != joint.y(nt + i)) ds[i] *= factor;
    }
    ClipStats st = clip_and_normalize(dt, ds, 1.0);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  return out;
}

BoostResult transferboost(const Sample& s_s, const Sample& s_t,
                          const BoostConfig& cfg) {
  std::size_t nt = s_t.size();
  std::size_t ns = s_s.size();
  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> dt(nt, 1.0 / static_cast<double>(nt + ns));
  std::vector<double> ds(ns, 1.0 / static_cast<double>(nt + ns));

  BoostResult out;
  out.ensemble.mode = TaskMode::classification;
  out.trace.stop_reason = "completed";

  std::vector<double> jp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(joint, dall, cfg.base);
    std::vector<double> wt = renormalized(dt, "target");
    LinearHypothesis ht = train_weighted(s_t, wt, cfg.base);
    // transferability: does pooling the source beat target-only on target?
    double tau = weighted_error_01(ht, s_t, wt) - weighted_error_01(h, s_t, wt);

    double eps = weighted_error_01(h, joint, dall);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    predict_all(h, joint, jp);
    for (std::size_t i = 0; i < nt; ++i) {
      if (sign(jp[i]) != joint.y(i)) dt[i] *= std::exp(alpha);
    }
    for (std::size_t i = 0; i < ns; ++i) {
      bool mistake = sign(jp[nt + i]) != joint.y(nt + i);
      ds[i] *= std::exp((mistake ? alpha : 0.0) + tau);
    }
    ClipStats st = clip_and_normalize(dt, ds, 1.0);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  return out;
}

BoostResult tradaboost_r2(const Sample& s_s, const Sample& s_t,
                          const BoostConfig& cfg) {
  std::size_t nt = s_t.size();
  std::size_t ns = s_s.size();
  std::size_t n = nt + ns;
  Sample joint = concat(s_t, s_s, DomainTag::target());
  std::vector<double> dt(nt, 1.0 / static_cast<double>(n));
  std::vector<double> ds(ns, 1.0 / static_cast<double>(n));
  double log_factor = std::log(tradaboost_source_factor(ns, cfg.rounds));

  BoostResult out;
  out.ensemble.mode = TaskMode::regression;
  out.trace.stop_reason = "completed";

  std::vector<double> jp;
  for (int k = 1; k <= cfg.rounds; ++k) {
    std::vector<double> dall = join_weights(dt, ds);
    LinearHypothesis h = train_weighted(joint, dall, cfg.base);
    predict_all(h, joint, jp);
    double e_max = kernels::max_abs_diff(jp.data(), joint.labels().data(), n);
    if (e_max == 0.0) {
      double eps = cfg.epsilon_floor;
      double alpha = std::log((1.0 - eps) / eps);
      RoundRecord rec;
      rec.k = k;
      rec.epsilon = eps;
      rec.alpha = alpha;
      rec.weights = WeightVector(dt, ds);
      ClipStats st;
      st.z_preclip = kernels::sum(dt.data(), dt.size()) +
                     kernels::sum(ds.data(), ds.size());
      st.max_preclip = vec_max(ds, vec_max(dt));
      st.norm_total = st.z_preclip;
      finish_record(rec, st, dt, ds);
      out.trace.rounds.push_back(std::move(rec));
      out.ensemble.members.push_back({alpha, std::move(h)});
      out.trace.truncated = true;
      out.trace.stop_reason = "perfect_fit";
      break;
    }
    std::vector<double> eps_i(n);
    for (std::size_t i = 0; i < n; ++i)
      eps_i[i] = std::fabs(jp[i] - joint.y(i)) / e_max;
    std::vector<double> wt = renormalized(dt, "target");
    double eps = kernels::dot(wt.data(), eps_i.data(), nt);
    if (eps >= 0.5) {
      out.trace.truncated = true;
      out.trace.stop_reason = "epsilon_half";
      break;
    }
    double alpha = round_alpha(eps, cfg.epsilon_floor);

    RoundRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.alpha = alpha;
    rec.weights = WeightVector(dt, ds);

    for (std::size_t i = 0; i < nt; ++i) dt[i] *= std::exp(alpha * eps_i[i]);
    for (std::size_t i = 0; i < ns; ++i)
      ds[i] *= std::exp(log_factor * eps_i[nt + i]);
    ClipStats st = clip_and_normalize(dt, ds, 1.0);
    finish_record(rec, st, dt, ds);
    out.trace.rounds.push_back(std::move(rec));
    out.ensemble.members.push_back({alpha, std::move(h)});
  }
  out.trace.final_weights = WeightVector(dt, ds);
  normalize_alphas(out.ensemble);
  return out;
}

}  // namespace

double tradaboost_source_factor(std::size_t n_source, int rounds) {
  if (n_source == 0 || rounds < 1)
    throw std::invalid_argument("tradaboost_source_factor: bad arguments");
  return 1.0 /
         (1.0 + std::sqrt(2.0 * std::log(static_cast<double>(n_source)) /
                          static_cast<double>(rounds)));
}

BoostResult run_baseline(BaselineKind kind, const Sample& s_s,
                         const Sample& s_t, const BoostConfig& cfg) {
  cfg.validate();
  bool classification = kind == BaselineKind::adaboost_t ||
                        kind == BaselineKind::adaboost_ts ||
                        kind == BaselineKind::tradaboost ||
                        kind == BaselineKind::transferboost;
  TaskMode want = classification ? TaskMode::classification
                                 : TaskMode::regression;
  if (cfg.mode != want)
    throw std::invalid_argument("run_baseline: config mode mismatch");
  if (s_t.size() == 0) throw std::invalid_argument("boost: empty domain sample");
  if (classification && !s_t.labels_are_signs())
    throw std::invalid_argument("boost: labels must be -1 or +1");

  switch (kind) {
    case BaselineKind::adaboost_t:
      return plain_adaboost(s_t, s_t.size(), cfg);
    case BaselineKind::adaboost_r2_t:
      return plain_adaboost_r2(s_t, s_t.size(), cfg);
    default:
      break;
  }
  check_pair(s_s, s_t);
  if (classification && !s_s.labels_are_signs())
    throw std::invalid_argument("boost: labels must be -1 or +1");
  switch (kind) {
    case BaselineKind::adaboost_ts:
      return plain_adaboost(concat(s_t, s_s, DomainTag::target()), s_t.size(),
                            cfg);
    case BaselineKind::tradaboost:
      return tradaboost(s_s, s_t, cfg);
    case BaselineKind::transferboost:
      return transferboost(s_s, s_t, cfg);
    case BaselineKind::adaboost_r2_ts:
      return plain_adaboost_r2(concat(s_t, s_s, DomainTag::target()),
                               s_t.size(), cfg);
    case BaselineKind::tradaboost_r2:
      return tradaboost_r2(s_s, s_t, cfg);
    default:
      throw std::invalid_argument("run_baseline: unknown kind");
  }
}

double Ensemble::score(std::span<const double> x) const {
  double acc = 0.0;
  for (const Member& m : members) {
    double p = gapmin::predict(m.h, x);
    acc += m.alpha * (mode == TaskMode::classification ? sign(p) : p);
  }
  return acc;
}

double Ensemble::predict(std::span<const double> x) const {
  double s = score(x);
  return mode == TaskMode::classification ? sign(s) : s;
}

double Ensemble::error_rate(const Sample& s) const {
  if (mode != TaskMode::classification)
    throw std::invalid_argument("error_rate: classification ensembles only");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (predict(s.x(i)) != s.y(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(s.size());
}

double Ensemble::rmse(const Sample& s) const {
  if (mode != TaskMode::regression)
    throw std::invalid_argument("rmse: regression ensembles only");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double r = predict(s.x(i)) - s.y(i);
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(s.size()));
}

std::string Ensemble::to_json() const {
  nlohmann::json j;
  j["mode"] = mode == TaskMode::classification ? "classification" : "regression";
  auto arr = nlohmann::json::array();
  for (const Member& m : members)
    arr.push_back({{"alpha", m.alpha}, {"w", m.h.w}});
  j["members"] = arr;
  return j.dump();
}

std::string BoostTrace::to_csv() const {
  std::string out = "k,epsilon,alpha,max_weight,source_mass\n";
  char line[160];
  for (const RoundRecord& r : rounds) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.k,
                  r.epsilon, r.alpha, r.max_weight, r.source_mass);
    out += line;
  }
  return out;
}

std::string BoostTrace::to_json() const {
  nlohmann::json j;
  j["truncated"] = truncated;
  j["stop_reason"] = stop_reason;
  auto arr = nlohmann::json::array();
  for (const RoundRecord& r : rounds) {
    arr.push_back({{"k", r.k},
                   {"epsilon", r.epsilon},
                   {"alpha", r.alpha},
                   {"z_preclip", r.z_preclip},
                   {"max_weight_preclip", r.max_weight_preclip},
                   {"clipped", r.clipped},
                   {"norm_total", r.norm_total},
                   {"max_weight", r.max_weight},
                   {"source_mass", r.source_mass},
                   {"target_weights", r.weights.target},
                   {"source_weights", r.weights.source}});
  }
  j["rounds"] = arr;
  j["final_target_weights"] = final_weights.target;
  j["final_source_weights"] = final_weights.source;
  return j.dump();
}

}  // namespace gapmin
