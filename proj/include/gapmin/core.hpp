#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapmin {

// Thrown when a mathematical invariant the code is supposed to guarantee
// fails at runtime (never for bad user input).
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Example {
  std::vector<double> x;
  double y = 0.0;
};

struct DomainTag {
  enum class Kind { source, target, task };
  Kind kind = Kind::target;
  int task_index = -1;  // only meaningful for Kind::task

  static DomainTag source() { return {Kind::source, -1}; }
  static DomainTag target() { return {Kind::target, -1}; }
  static DomainTag task(int index) { return {Kind::task, index}; }
  std::string str() const;
};

// Fixed-dimension dataset. Features are stored row-major so the kernels can
// stream over them.
class Sample {
 public:
  Sample(const std::vector<Example>& examples, DomainTag tag);
  Sample(std::vector<double> features_row_major, std::vector<double> labels,
         std::size_t dim, DomainTag tag);

  std::size_t size() const { return ys_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> x(std::size_t i) const {
    return {xs_.data() + i * dim_, dim_};
  }
  double y(std::size_t i) const { return ys_[i]; }
  const double* x_data() const { return xs_.data(); }
  const std::vector<double>& labels() const { return ys_; }
  const DomainTag& tag() const { return tag_; }

  bool labels_are_signs() const;  // every y is exactly -1 or +1
  Sample with_tag(DomainTag tag) const;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::size_t dim_;
  DomainTag tag_;
};

// Concatenation keeps a's rows first. Project convention throughout: combined
// transfer samples are ordered target block then source block.
Sample concat(const Sample& a, const Sample& b, DomainTag tag);
// Appends a constant 1 feature as the last coordinate.
Sample augment_constant(const Sample& s);
Sample subset(const Sample& s, const std::vector<std::size_t>& indices);
Sample drop_feature(const Sample& s, std::size_t column);
// max_i ||x_i||_2
double sample_radius(const Sample& s);
// max_i |y_i|
double max_abs_label(const Sample& s);

// Per-instance weights over a combined sample, split into the target and
// source blocks. Construction checks nonnegativity and finiteness; the
// sum-to-1 condition is checked by require_normalized() at the call sites
// whose contracts demand a distribution (gap and lemma computations accept
// unnormalized sub-vectors).
struct WeightVector {
  std::vector<double> target;
  std::vector<double> source;

  WeightVector() = default;
  WeightVector(std::vector<double> target_weights,
               std::vector<double> source_weights);
  static WeightVector uniform(std::size_t n_target, std::size_t n_source);

  std::size_t size() const { return target.size() + source.size(); }
  double total() const;
  double source_l1() const;
  double linf() const;
  double l2_squared() const;
  // [target block; source block], matching concat(target, source) order
  std::vector<double> combined() const;
  bool is_normalized(double tol = 1e-9) const;
  void require_normalized(double tol = 1e-9) const;
};

struct LinearHypothesis {
  std::vector<double> w;
  std::size_t dim() const { return w.size(); }
  double norm() const;
};

enum class LossKind { squared, absolute, logistic, hinge, lq };

struct LossSpec {
  LossKind kind = LossKind::squared;
  double q = 2.0;  // exponent for LossKind::lq, >= 1
  // Lipschitz constant rho. Absolute/Logistic/Hinge default to 1; Squared and
  // Lq have no global constant, so bound calculators insist on a caller value.
  std::optional<double> lipschitz;

  void validate() const;
  double rho() const;
  std::string kind_name() const;
};

struct BoundInputs {
  double radius = 1.0;  // R >= max ||x||_2 over the sample
  double rho = 1.0;
  double lambda = 1.0;
  double delta = 0.05;
  std::optional<double> dist_y;  // Y-discrepancy, user supplied
  double loss_bound_b = 0.0;     // B(Gamma)

  void validate() const;
  // Checks R against the empirical max feature norm.
  void check_radius(const Sample& s) const;
};

// sign(0) = +1 so that error rates are reproducible.
double sign(double v);
double predict(const LinearHypothesis& h, std::span<const double> x);
void predict_all(const LinearHypothesis& h, const Sample& s,
                 std::vector<double>& out);
double loss_value(const LossSpec& spec, double pred, double y);

}  // namespace gapmin
