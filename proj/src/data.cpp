#include "ebst/data.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ebst/rng.hpp"

namespace ebst {

void LabeledSet::validate() const {
  if (features.rows() == 0) throw std::invalid_argument("labeled set is empty");
  if (labels.size() != features.rows())
    throw std::invalid_argument("labeled set: label count != row count");
  if (n_classes == 0) throw std::invalid_argument("labeled set: n_classes is 0");
  for (std::size_t y : labels)
    if (y >= n_classes)
      throw std::invalid_argument("labeled set: label out of range");
  if (!features.all_finite())
    throw std::invalid_argument("labeled set: non-finite feature");
}

void UnlabeledSet::validate() const {
  if (features.rows() == 0) throw std::invalid_argument("unlabeled set is empty");
  if (!features.all_finite())
    throw std::invalid_argument("unlabeled set: non-finite feature");
}

namespace {

void rotate_in_place(Matrix& points, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    double x = points(r, 0);
    double y = points(r, 1);
    points(r, 0) = c * x - s * y;
    points(r, 1) = s * x + c * y;
  }
}

}  // namespace

LabeledSet moons_domain(std::size_t n, double rotation_degrees, double noise_std,
                        std::uint64_t seed, DomainTag tag) {
  if (n < 2) throw std::invalid_argument("moons: need n >= 2");
  if (noise_std < 0.0) throw std::invalid_argument("moons: negative noise_std");
  const std::size_t n0 = n - n / 2;
  const std::size_t n1 = n / 2;
  Rng rng(seed);
  LabeledSet set;
  set.features = Matrix(n, 2);
  set.labels.resize(n);
  set.n_classes = 2;
  set.domain = tag;
  for (std::size_t i = 0; i < n0; ++i) {
    double t = n0 > 1 ? std::numbers::pi * static_cast<double>(i) /
                            static_cast<double>(n0 - 1)
                      : 0.0;
    set.features(i, 0) = std::cos(t) + noise_std * rng.gaussian();
    set.features(i, 1) = std::sin(t) + noise_std * rng.gaussian();
    set.labels[i] = 0;
  }
  for (std::size_t i = 0; i < n1; ++i) {
    double t = n1 > 1 ? std::numbers::pi * static_cast<double>(i) /
                            static_cast<double>(n1 - 1)
                      : 0.0;
    set.features(n0 + i, 0) = 1.0 - std::cos(t) + noise_std * rng.gaussian();
    set.features(n0 + i, 1) = 0.5 - std::sin(t) + noise_std * rng.gaussian();
    set.labels[n0 + i] = 1;
  }
  rotate_in_place(set.features, rotation_degrees);
  return set;
}

DomainTriple gen_two_moons(std::size_t n_per_domain, double rotation_degrees,
                           double noise_std, std::uint64_t seed) {
  Rng base(seed);
  const std::uint64_t src_seed = base.fork(1).seed();
  const std::uint64_t tgt_seed = base.fork(2).seed();
  DomainTriple out;
  out.source = moons_domain(n_per_domain, 0.0, noise_std, src_seed, DomainTag::Source);
  LabeledSet tgt = moons_domain(n_per_domain, rotation_degrees, noise_std,
                                tgt_seed, DomainTag::TargetEval);
  out.target.features = tgt.features;
  out.target_eval = std::move(tgt);
  return out;
}

namespace {

LabeledSet blobs_domain(const Matrix& centers, std::size_t n, std::uint64_t seed,
                        DomainTag tag) {
  const std::size_t k = centers.rows();
  const std::size_t d = centers.cols();
  Rng rng(seed);
  LabeledSet set;
  set.features = Matrix(n, d);
  set.labels.resize(n);
  set.n_classes = k;
  set.domain = tag;
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t count = n / k + (c < n % k ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j)
        set.features(row, j) = centers(c, j) + rng.gaussian();
      set.labels[row] = c;
    }
  }
  return set;
}

}  // namespace

DomainTriple gen_gaussian_blobs(std::size_t n_per_domain, std::size_t k,
                                std::size_t d, const std::vector<double>& shift,
                                std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("blobs: need k >= 2");
  if (d < 2) throw std::invalid_argument("blobs: need d >= 2");
  if (n_per_domain < k) throw std::invalid_argument("blobs: need n >= k");
  if (shift.size() != d)
    throw std::invalid_argument("blobs: shift dimension != d");
  Rng base(seed);
  Rng center_rng = base.fork(0);
  Matrix centers(k, d);
  for (double& v : centers.data()) v = center_rng.uniform(-5.0, 5.0);

  Matrix shifted = centers;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) shifted(c, j) += shift[j];

  DomainTriple out;
  out.source = blobs_domain(centers, n_per_domain, base.fork(1).seed(),
                            DomainTag::Source);
  LabeledSet tgt = blobs_domain(shifted, n_per_domain, base.fork(2).seed(),
                                DomainTag::TargetEval);
  out.target.features = tgt.features;
  out.target_eval = std::move(tgt);
  return out;
}

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() == 0)
    throw std::invalid_argument("standardizer: empty fit set");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.std_dev.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += features(r, c);
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double diff = features(r, c) - s.mean[c];
      s.std_dev[c] += diff * diff;
    }
  for (std::size_t c = 0; c < d; ++c) {
    s.std_dev[c] = std::sqrt(s.std_dev[c] / static_cast<double>(n));
    if (s.std_dev[c] <= 1e-12)
      throw std::invalid_argument("standardizer: zero-variance feature " +
                                  std::to_string(c));
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size())
    throw std::invalid_argument("standardizer: dimension mismatch");
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = (out(r, c) - mean[c]) / std_dev[c];
  return out;
}

}  // namespace ebst
