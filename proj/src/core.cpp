#include "gapmin/core.hpp"

#include <algorithm>
#include <cmath>

#include "gapmin/kernels.hpp"

namespace gapmin {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " contains a non-finite value");
    }
  }
}

}  // namespace

std::string DomainTag::str() const {
  switch (kind) {
    case Kind::source:
      return "source";
    case Kind::target:
      return "target";
    case Kind::task:
      return "task" + std::to_string(task_index);
  }
  return "?";
}

Sample::Sample(const std::vector<Example>& examples, DomainTag tag)
    : tag_(tag) {
  if (examples.empty()) throw std::invalid_argument("Sample: empty example list");
  dim_ = examples[0].x.size();
  if (dim_ == 0) throw std::invalid_argument("Sample: zero-dimensional examples");
  xs_.reserve(examples.size() * dim_);
  ys_.reserve(examples.size());
  for (const Example& e : examples) {
    if (e.x.size() != dim_)
      throw std::invalid_argument("Sample: inconsistent example dimension");
    xs_.insert(xs_.end(), e.x.begin(), e.x.end());
    ys_.push_back(e.y);
  }
  require_finite(xs_, "Sample features");
  require_finite(ys_, "Sample labels");
}

Sample::Sample(std::vector<double> features_row_major,
               std::vector<double> labels, std::size_t dim, DomainTag tag)
    : xs_(std::move(features_row_major)),
      ys_(std::move(labels)),
      dim_(dim),
      tag_(tag) {
  // size 0 with a declared dimension is allowed: degenerate source-free
  // transfer problems carry an empty source sample
  if (dim_ == 0) throw std::invalid_argument("Sample: zero dimension");
  if (xs_.size() != ys_.size() * dim_)
    throw std::invalid_argument("Sample: feature buffer size mismatch");
  require_finite(xs_, "Sample features");
  require_finite(ys_, "Sample labels");
}

bool Sample::labels_are_signs() const {
  return std::all_of(ys_.begin(), ys_.end(),
                     [](double y) { return y == 1.0 || y == -1.0; });
}

Sample Sample::with_tag(DomainTag tag) const {
  return Sample(xs_, ys_, dim_, tag);
}

Sample concat(const Sample& a, const Sample& b, DomainTag tag) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("concat: dimension mismatch");
  std::vector<double> xs(a.x_data(), a.x_data() + a.size() * a.dim());
  xs.insert(xs.end(), b.x_data(), b.x_data() + b.size() * b.dim());
  std::vector<double> ys = a.labels();
  ys.insert(ys.end(), b.labels().begin(), b.labels().end());
  return Sample(std::move(xs), std::move(ys), a.dim(), tag);
}

Sample augment_constant(const Sample& s) {
  std::size_t d = s.dim();
  std::vector<double> xs;
  xs.reserve(s.size() * (d + 1));
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = s.x(i);
    xs.insert(xs.end(), xi.begin(), xi.end());
    xs.push_back(1.0);
  }
  return Sample(std::move(xs), s.labels(), d + 1, s.tag());
}

Sample subset(const Sample& s, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("subset: empty index list");
  std::size_t d = s.dim();
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(indices.size() * d);
  ys.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= s.size()) throw std::invalid_argument("subset: index out of range");
    auto xi = s.x(i);
    xs.insert(xs.end(), xi.begin(), xi.end());
    ys.push_back(s.y(i));
  }
  return Sample(std::move(xs), std::move(ys), d, s.tag());
}

Sample drop_feature(const Sample& s, std::size_t column) {
  if (column >= s.dim())
    throw std::invalid_argument("drop_feature: column out of range");
  if (s.dim() < 2)
    throw std::invalid_argument("drop_feature: would leave zero features");
  std::size_t d = s.dim();
  std::vector<double> xs;
  xs.reserve(s.size() * (d - 1));
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = s.x(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (j != column) xs.push_back(xi[j]);
    }
  }
  return Sample(std::move(xs), s.labels(), d - 1, s.tag());
}

double sample_radius(const Sample& s) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = s.x(i);
    double n2 = kernels::dot(xi.data(), xi.data(), xi.size());
    if (n2 > r2) r2 = n2;
  }
  return std::sqrt(r2);
}

double max_abs_label(const Sample& s) {
  double m = 0.0;
  for (double y : s.labels()) m = std::max(m, std::fabs(y));
  return m;
}

WeightVector::WeightVector(std::vector<double> target_weights,
                           std::vector<double> source_weights)
    : target(std::move(target_weights)), source(std::move(source_weights)) {
  for (const auto* block : {&target, &source}) {
    for (double w : *block) {
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("WeightVector: weights must be finite and >= 0");
    }
  }
}

WeightVector WeightVector::uniform(std::size_t n_target, std::size_t n_source) {
  double w = 1.0 / static_cast<double>(n_target + n_source);
  return WeightVector(std::vector<double>(n_target, w),
                      std::vector<double>(n_source, w));
}

double WeightVector::total() const {
  return kernels::sum(target.data(), target.size()) +
         kernels::sum(source.data(), source.size());
}

double WeightVector::source_l1() const {
  return kernels::sum(source.data(), source.size());
}

double WeightVector::linf() const {
  double m = 0.0;
  for (double w : target) m = std::max(m, w);
  for (double w : source) m = std::max(m, w);
  return m;
}

double WeightVector::l2_squared() const {
  return kernels::dot(target.data(), target.data(), target.size()) +
         kernels::dot(source.data(), source.data(), source.size());
}

std::vector<double> WeightVector::combined() const {
  std::vector<double> all = target;
  all.insert(all.end(), source.begin(), source.end());
  return all;
}

bool WeightVector::is_normalized(double tol) const {
  return std::fabs(total() - 1.0) <= tol;
}

void WeightVector::require_normalized(double tol) const {
  if (!is_normalized(tol))
    throw std::invalid_argument("WeightVector: weights must sum to 1");
}

double LinearHypothesis::norm() const {
  return std::sqrt(kernels::dot(w.data(), w.data(), w.size()));
}

void LossSpec::validate() const {
  if (kind == LossKind::lq && !(q >= 1.0))
    throw std::invalid_argument("LossSpec: Lq exponent must be >= 1");
  if (lipschitz && !(*lipschitz > 0.0))
    throw std::invalid_argument("LossSpec: lipschitz constant must be > 0");
}

double LossSpec::rho() const {
  if (lipschitz) return *lipschitz;
  switch (kind) {
    case LossKind::absolute:
    case LossKind::logistic:
    case LossKind::hinge:
      return 1.0;
    default:
      throw std::invalid_argument(
          "LossSpec: " + kind_name() +
          " loss has no global Lipschitz constant; supply one explicitly");
  }
}

std::string LossSpec::kind_name() const {
  switch (kind) {
    case LossKind::squared:
      return "squared";
    case LossKind::absolute:
      return "absolute";
    case LossKind::logistic:
      return "logistic";
    case LossKind::hinge:
      return "hinge";
    case LossKind::lq:
      return "lq";
  }
  return "?";
}

void BoundInputs::validate() const {
  if (!(radius >= 0.0)) throw std::invalid_argument("BoundInputs: R must be >= 0");
  if (!(rho > 0.0)) throw std::invalid_argument("BoundInputs: rho must be > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("BoundInputs: lambda must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("BoundInputs: delta must be in (0,1)");
  if (dist_y && !(*dist_y >= 0.0))
    throw std::invalid_argument("BoundInputs: dist_y must be >= 0");
  if (!(loss_bound_b >= 0.0))
    throw std::invalid_argument("BoundInputs: B must be >= 0");
}

void BoundInputs::check_radius(const Sample& s) const {
  double r = sample_radius(s);
  if (radius < r - 1e-12)
    throw std::invalid_argument("BoundInputs: R below empirical max feature norm");
}

double sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

double predict(const LinearHypothesis& h, std::span<const double> x) {
  if (h.w.size() != x.size())
    throw std::invalid_argument("predict: dimension mismatch");
  return kernels::dot(h.w.data(), x.data(), x.size());
}

void predict_all(const LinearHypothesis& h, const Sample& s,
                 std::vector<double>& out) {
  if (h.w.size() != s.dim())
    throw std::invalid_argument("predict_all: dimension mismatch");
  out.resize(s.size());
  kernels::matvec(s.x_data(), s.size(), s.dim(), h.w.data(), out.data());
}

double loss_value(const LossSpec& spec, double pred, double y) {
  switch (spec.kind) {
    case LossKind::squared: {
      double r = pred - y;
      return r * r;
    }
    case LossKind::absolute:
      return std::fabs(pred - y);
    case LossKind::logistic: {
      // log(1 + exp(-y*pred)) via the overflow-safe softplus form
      double m = -y * pred;
      return std::max(m, 0.0) + std::log1p(std::exp(-std::fabs(m)));
    }
    case LossKind::hinge:
      return std::max(0.0, 1.0 - y * pred);
    case LossKind::lq:
      return std::pow(std::fabs(pred - y), spec.q);
  }
  throw std::invalid_argument("loss_value: unknown loss kind");
}

}  // namespace gapmin
