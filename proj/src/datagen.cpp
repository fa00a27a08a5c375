#include "gapmin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gapmin/random.hpp"

namespace gapmin {

namespace {

constexpr std::size_t kFriedmanDim = 10;

Sample friedman_points(int n, const FriedmanParams& p, rng::Engine& eng,
                       DomainTag tag) {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(static_cast<std::size_t>(n) * kFriedmanDim);
  ys.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double row[kFriedmanDim];
    for (double& v : row) v = rng::uniform01(eng);
    double noise = rng::normal(eng);
    ys.push_back(friedman_response(p, row) + p.noise_sd * noise);
    xs.insert(xs.end(), row, row + kFriedmanDim);
  }
  return Sample(std::move(xs), std::move(ys), kFriedmanDim, tag);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

void FriedmanParams::validate() const {
  auto ok = [](double v) { return std::isfinite(v); };
  for (double v : a)
    if (!ok(v)) throw std::invalid_argument("FriedmanParams: non-finite a");
  for (double v : b)
    if (!ok(v)) throw std::invalid_argument("FriedmanParams: non-finite b");
  for (double v : c)
    if (!ok(v)) throw std::invalid_argument("FriedmanParams: non-finite c");
  if (!ok(noise_sd) || noise_sd < 0.0)
    throw std::invalid_argument("FriedmanParams: noise_sd must be >= 0");
}

double friedman_response(const FriedmanParams& p, std::span<const double> x) {
  if (x.size() < 5)
    throw std::invalid_argument("friedman_response: needs >= 5 features");
  double s1 = p.b[0] * x[0] + p.c[0];
  double s2 = p.b[1] * x[1] + p.c[1];
  double s3 = p.b[2] * x[2] + p.c[2] - 0.5;
  return p.a[0] * 10.0 * std::sin(std::numbers::pi * s1 * s2) +
         p.a[1] * 20.0 * s3 * s3 + p.a[2] * 10.0 * (p.b[3] * x[3] + p.c[3]) +
         p.a[3] * 5.0 * (p.b[4] * x[4] + p.c[4]);
}

Sample friedman_generate(int n, const FriedmanParams& p, std::uint64_t seed,
                         DomainTag tag) {
  if (n < 1) throw std::invalid_argument("friedman_generate: n must be >= 1");
  p.validate();
  rng::Engine eng(seed);
  return friedman_points(n, p, eng, tag);
}

TransferProblem friedman_transfer(int n_src_each, int n_tgt, int n_sources,
                                  std::uint64_t seed, double noise_sd) {
  if (n_src_each < 1 || n_tgt < 1)
    throw std::invalid_argument("friedman_transfer: sizes must be >= 1");
  if (n_sources < 0)
    throw std::invalid_argument("friedman_transfer: n_sources must be >= 0");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw std::invalid_argument("friedman_transfer: noise_sd must be >= 0");

  rng::Engine eng(seed);
  FriedmanParams target_params;
  target_params.noise_sd = noise_sd;
  Sample target = friedman_points(n_tgt, target_params, eng, DomainTag::target());

  std::vector<double> xs;
  std::vector<double> ys;
  for (int s = 0; s < n_sources; ++s) {
    FriedmanParams p;
    p.noise_sd = noise_sd;
    for (double& v : p.a) v = rng::normal(eng, 1.0, 0.1);
    for (double& v : p.b) v = rng::normal(eng, 1.0, 0.1);
    for (double& v : p.c) v = rng::normal(eng, 0.0, 0.05);
    Sample part = friedman_points(n_src_each, p, eng, DomainTag::source());
    xs.insert(xs.end(), part.x_data(), part.x_data() + part.size() * kFriedmanDim);
    ys.insert(ys.end(), part.labels().begin(), part.labels().end());
  }
  Sample source(std::move(xs), std::move(ys), kFriedmanDim, DomainTag::source());
  return {std::move(source), std::move(target)};
}

ThreeWaySplit feature_shift_split(const Sample& s, double target_corr) {
  std::size_t n = s.size();
  std::size_t d = s.dim();
  if (d < 2)
    throw std::invalid_argument("feature_shift_split: needs >= 2 features");
  if (n < 3)
    throw std::invalid_argument("feature_shift_split: needs >= 3 examples");
  if (!std::isfinite(target_corr))
    throw std::invalid_argument("feature_shift_split: bad target_corr");

  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) y_mean += s.y(i);
  y_mean /= static_cast<double>(n);
  double y_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dy = s.y(i) - y_mean;
    y_var += dy * dy;
  }
  if (y_var == 0.0)
    throw std::invalid_argument(
        "feature_shift_split: constant labels, correlation undefined");

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < d; ++f) {
    double x_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) x_mean += s.x(i)[f];
    x_mean /= static_cast<double>(n);
    double x_var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dx = s.x(i)[f] - x_mean;
      x_var += dx * dx;
      cov += dx * (s.y(i) - y_mean);
    }
    double corr = x_var == 0.0 ? 0.0 : cov / std::sqrt(x_var * y_var);
    double score = std::fabs(std::fabs(corr) - target_corr);
    if (score < best_score) {
      best_score = score;
      best = f;
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    double vi = s.x(i)[best], vj = s.x(j)[best];
    return vi < vj || (vi == vj && i < j);
  });

  std::size_t base = n / 3;
  std::size_t rem = n % 3;
  std::size_t n_low = base + (rem > 0 ? 1 : 0);
  std::size_t n_mid = base + (rem > 1 ? 1 : 0);
  auto piece = [&](std::size_t from, std::size_t count, DomainTag tag) {
    std::vector<std::size_t> idx(order.begin() + from,
                                 order.begin() + from + count);
    return drop_feature(subset(s, idx), best).with_tag(tag);
  };
  ThreeWaySplit out{piece(0, n_low, DomainTag::task(0)),
                    piece(n_low, n_mid, DomainTag::task(1)),
                    piece(n_low + n_mid, n - n_low - n_mid, DomainTag::task(2)),
                    best};
  return out;
}

TransferProblem gaussian_shift_classification(int n_src, int n_tgt,
                                              const std::vector<double>& shift,
                                              double flip_prob,
                                              std::uint64_t seed) {
  if (shift.empty())
    throw std::invalid_argument("gaussian_shift: shift must be non-empty");
  for (double v : shift)
    if (!std::isfinite(v))
      throw std::invalid_argument("gaussian_shift: non-finite shift");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5))
    throw std::invalid_argument("gaussian_shift: flip_prob must be in [0, 0.5)");
  if (n_src < 0 || n_tgt < 1)
    throw std::invalid_argument("gaussian_shift: bad sample sizes");

  std::size_t d = shift.size();
  rng::Engine eng(seed);

  auto draw = [&](int n, bool shifted, DomainTag tag) {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(static_cast<std::size_t>(n) * d);
    ys.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double y = rng::uniform01(eng) <= 0.5 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < d; ++j) {
        double mu = j == 0 ? y : 0.0;
        xs.push_back(mu + rng::normal(eng) + (shifted ? shift[j] : 0.0));
      }
      double label = y;
      if (shifted && rng::uniform01(eng) <= flip_prob) label = -label;
      ys.push_back(label);
    }
    return Sample(std::move(xs), std::move(ys), d, tag);
  };

  Sample source = draw(n_src, true, DomainTag::source());
  Sample target = draw(n_tgt, false, DomainTag::target());
  return {std::move(source), std::move(target)};
}

Sample load_csv(const std::string& path, const std::string& label_column,
                DomainTag tag) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(file, line))
    throw std::runtime_error("load_csv: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) {
      label_idx = i;
      break;
    }
  }
  if (label_idx == header.size())
    throw std::runtime_error("load_csv: no column named '" + label_column +
                             "' in " + path);
  if (header.size() < 2)
    throw std::runtime_error("load_csv: " + path + " has no feature columns");

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv: " + path + " line " +
                               std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string& cell = cells[i];
      char* end = nullptr;
      double v = cell.empty() ? 0.0 : std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() ||
          !std::isfinite(v))
        throw std::runtime_error("load_csv: " + path + " line " +
                                 std::to_string(line_no) + ", column " +
                                 std::to_string(i + 1) + " ('" + header[i] +
                                 "'): not a finite number: '" + cell + "'");
      if (i == label_idx) {
        ys.push_back(v);
      } else {
        xs.push_back(v);
      }
    }
  }
  if (ys.empty())
    throw std::runtime_error("load_csv: " + path + " has no data rows");
  return Sample(std::move(xs), std::move(ys), header.size() - 1, tag);
}

void save_csv(const Sample& s, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("save_csv: cannot open " + path);
  std::ostringstream out;
  for (std::size_t j = 0; j < s.dim(); ++j) out << 'x' << j + 1 << ',';
  out << "y\n";
  char buf[40];
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = s.x(i);
    for (std::size_t j = 0; j < s.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", xi[j]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", s.y(i));
    out << buf;
  }
  file << out.str();
  file.flush();
  if (!file) throw std::runtime_error("save_csv: write failed for " + path);
}

Standardizer Standardizer::fit(const Sample& s) {
  if (s.size() == 0)
    throw std::invalid_argument("Standardizer: empty sample");
  std::size_t n = s.size();
  std::size_t d = s.dim();
  Standardizer z;
  z.mean.assign(d, 0.0);
  z.sd.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = s.x(i);
    for (std::size_t j = 0; j < d; ++j) z.mean[j] += xi[j];
  }
  for (double& m : z.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = s.x(i);
    for (std::size_t j = 0; j < d; ++j) {
      double dx = xi[j] - z.mean[j];
      z.sd[j] += dx * dx;
    }
  }
  for (double& v : z.sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v == 0.0) v = 1.0;
  }
  return z;
}

Sample Standardizer::transform(const Sample& s) const {
  if (s.dim() != mean.size())
    throw std::invalid_argument("Standardizer: dimension mismatch");
  std::vector<double> xs;
  xs.reserve(s.size() * s.dim());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = s.x(i);
    for (std::size_t j = 0; j < s.dim(); ++j)
      xs.push_back((xi[j] - mean[j]) / sd[j]);
  }
  return Sample(std::move(xs), s.labels(), s.dim(), s.tag());
}

}  // namespace gapmin
