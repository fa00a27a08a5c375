#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gapmin {

// Outcome of one randomized inequality suite. worst_slack is the smallest
// margin seen across all checks: for the lemma suites the margin is
// bound-side minus solution-side of the inequality, for the identity and
// limit suites it is tolerance minus observed deviation. Negative margins
// beyond tolerance are counted in violations and described in deviations.
struct SuiteReport {
  std::string name;
  int trials = 0;
  int checks = 0;
  int violations = 0;
  double worst_slack = 0.0;
  double min_nabla = 0.0;  // smallest gap component seen
  std::vector<std::string> deviations;

  bool ok() const { return violations == 0; }
  std::string to_json() const;
};

// Instance weighting: ||h*||^2 <= nabla/(2 lambda (1-2 eta)) +
// (||h_S||^2+||h_T||^2)/2, swept over eta x lambda per problem.
SuiteReport lemma1_suite(int trials, std::uint64_t seed);
// Hypothesis transfer: ||h*|| <= sqrt(nabla/lambda) + ||<H,Xi>||.
SuiteReport lemma3_suite(int trials, std::uint64_t seed);
// Task weighting: ||h_j*|| <= sqrt(nabla_j/(lambda(1-eta)) + ||hbar_j||^2).
SuiteReport lemma5_suite(int trials, std::uint64_t seed);
// Parameter sharing: ||h_j*|| <= sqrt(nabla/lambda_bar + ||hbar_j||^2).
SuiteReport lemma6_suite(int trials, std::uint64_t seed);
// Task covariance: ||h_j*|| <= sqrt(sigma_max nabla/K + ||hbar_j||^2).
SuiteReport lemma7_suite(int trials, std::uint64_t seed);
// Task covariance with the sharing-induced precision matrix reproduces the
// parameter-sharing solution coordinatewise within 1e-6.
SuiteReport identity_suite(int trials, std::uint64_t seed);
// lambda0 = 1e6 collapses sharing to per-task ridge; lambda = 1e6 collapses
// it to the pooled ridge. Both within 1e-3.
SuiteReport limits_suite(int trials, std::uint64_t seed);

std::vector<SuiteReport> run_all_suites(std::uint64_t seed);

}  // namespace gapmin
