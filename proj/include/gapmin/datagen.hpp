#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gapmin/core.hpp"

namespace gapmin {

struct FriedmanParams {
  std::array<double, 4> a{1.0, 1.0, 1.0, 1.0};
  std::array<double, 5> b{1.0, 1.0, 1.0, 1.0, 1.0};
  std::array<double, 5> c{0.0, 0.0, 0.0, 0.0, 0.0};
  double noise_sd = 1.0;

  void validate() const;
};

// Noise-free response at x (needs at least 5 features):
// a1*10*sin(pi*(b1*x1+c1)*(b2*x2+c2)) + a2*20*(b3*x3+c3-0.5)^2
// + a3*10*(b4*x4+c4) + a4*5*(b5*x5+c5)
double friedman_response(const FriedmanParams& p, std::span<const double> x);

// n points with 10 features uniform on [0,1]; label = response + Gaussian
// noise. Per point the stream is 10 uniforms then 1 normal, so runs are
// reproducible from the seed alone.
Sample friedman_generate(int n, const FriedmanParams& p, std::uint64_t seed,
                         DomainTag tag = DomainTag::target());

struct TransferProblem {
  Sample source;
  Sample target;
};

// Target uses the canonical parameters (a=b=1, c=0); each source domain
// perturbs them with a_i, b_i ~ N(1, 0.1^2) and c_i ~ N(0, 0.05^2), and all
// source domains are pooled into one sample. Stream order: target points,
// then per source domain its parameters followed by its points.
// n_sources = 0 yields an empty source sample (target-only baselines).
TransferProblem friedman_transfer(int n_src_each, int n_tgt, int n_sources,
                                  std::uint64_t seed, double noise_sd = 1.0);

struct ThreeWaySplit {
  Sample low;
  Sample mid;
  Sample high;
  std::size_t feature = 0;  // the dropped column of the input
};

// Picks the feature whose |Pearson correlation| with y is closest to
// target_corr (ties: lowest index), sorts by it, splits into thirds (any
// remainder goes to the lower thirds first), and drops that feature from all
// three outputs.
ThreeWaySplit feature_shift_split(const Sample& s, double target_corr = 0.4);

// Binary classification with controllable divergence: target draws two
// unit-variance Gaussian clouds at +/- e1; the source clouds are translated
// by `shift` and labels flip with probability flip_prob after positioning.
// Source points come first in the random stream.
TransferProblem gaussian_shift_classification(int n_src, int n_tgt,
                                              const std::vector<double>& shift,
                                              double flip_prob,
                                              std::uint64_t seed);

// Comma-separated with a header row; features keep their column order, the
// label column is matched by name. save_csv writes x1..xd then y with 17
// significant digits, so load(save(s)) round-trips exactly.
Sample load_csv(const std::string& path, const std::string& label_column,
                DomainTag tag);
void save_csv(const Sample& s, const std::string& path);

// Per-feature zero-mean unit-variance scaling with population standard
// deviation; constant features pass through unscaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  static Standardizer fit(const Sample& s);
  Sample transform(const Sample& s) const;
};

}  // namespace gapmin
