#pragma once

#include <string>

#include "gapmin/learners.hpp"

namespace gapmin {

enum class TaskMode { classification, regression };

struct BoostConfig {
  int rounds = 20;
  double rho_s = 0.0;      // <= 0, disagreement penalty on source weights
  double rho_t = 0.0;      // <= 0; >= 0 when agreement_bonus is set
  double gamma_max = 1.0;  // in (0, 1], per-weight cap relative to Z
  TrainSpec base;
  TaskMode mode = TaskMode::classification;
  // Flips the target-side disagreement term into a bonus applied when the
  // auxiliary learners agree; classification only, rho_t >= 0.
  bool agreement_bonus = false;
  double epsilon_floor = 1e-10;  // substitute for a zero round error

  void validate() const;
};

// Snapshot of one boosting round. weights is the distribution the round's
// learners were trained on; the z_* and norm fields describe the update that
// produced the next distribution.
struct RoundRecord {
  int k = 0;  // 1-based
  double epsilon = 0.0;
  double alpha = 0.0;
  WeightVector weights;
  double z_preclip = 0.0;           // sum of updated weights before clipping
  double max_weight_preclip = 0.0;  // largest updated weight before clipping
  int clipped = 0;                  // weights capped at gamma_max * Z
  double norm_total = 0.0;          // sum after clipping, the normalizer
  double max_weight = 0.0;          // largest weight after normalization
  double source_mass = 0.0;         // source block sum after normalization
};

struct BoostTrace {
  std::vector<RoundRecord> rounds;
  WeightVector final_weights;
  bool truncated = false;
  // "completed", "epsilon_half" (round error reached 1/2), or "perfect_fit"
  // (regression residuals all zero)
  std::string stop_reason;

  // one row per round: k, epsilon, alpha, max weight, source mass
  std::string to_csv() const;
  std::string to_json() const;
};

struct Ensemble {
  struct Member {
    double alpha = 0.0;
    LinearHypothesis h;
  };
  std::vector<Member> members;
  TaskMode mode = TaskMode::classification;

  // Classification members vote with their sign labels; regression members
  // contribute raw predictions (alphas are normalized to sum 1 by the
  // regression boosters). An empty ensemble scores 0.
  double score(std::span<const double> x) const;
  // sign(score) for classification, score for regression
  double predict(std::span<const double> x) const;
  double error_rate(const Sample& s) const;
  double rmse(const Sample& s) const;
  std::string to_json() const;
};

struct BoostResult {
  Ensemble ensemble;
  BoostTrace trace;
};

BoostResult gap_boost(const Sample& s_s, const Sample& s_t,
                      const BoostConfig& cfg);
BoostResult gap_boost_r(const Sample& s_s, const Sample& s_t,
                        const BoostConfig& cfg);

enum class BaselineKind {
  adaboost_t,      // target only
  adaboost_ts,     // pooled source + target
  tradaboost,      // fixed down-weighting of misclassified source points
  transferboost,   // per-round transferability term on source points
  adaboost_r2_t,   // regression, target only
  adaboost_r2_ts,  // regression, pooled
  tradaboost_r2,   // regression TrAdaBoost variant
};

// 1 / (1 + sqrt(2 ln N_S / K))
double tradaboost_source_factor(std::size_t n_source, int rounds);

BoostResult run_baseline(BaselineKind kind, const Sample& s_s,
                         const Sample& s_t, const BoostConfig& cfg);

}  // namespace gapmin
