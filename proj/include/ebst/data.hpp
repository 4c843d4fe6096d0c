#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebst/matrix.hpp"

namespace ebst {

enum class DomainTag { Source, Target, TargetEval };

struct LabeledSet {
  Matrix features;                  // N x D
  std::vector<std::size_t> labels;  // class indices in [0, n_classes)
  std::size_t n_classes = 0;
  DomainTag domain = DomainTag::Source;

  void validate() const;
};

// Target-domain samples carry no labels at all; ground truth for evaluation
// travels in a separate LabeledSet tagged TargetEval.
struct UnlabeledSet {
  Matrix features;  // N x D

  void validate() const;
};

struct DomainTriple {
  LabeledSet source;
  UnlabeledSet target;
  LabeledSet target_eval;  // same features as target, labels evaluation-only
};

// Two interleaved half circles in R^2 (K = 2), rotated about the origin by
// rotation_degrees, with isotropic Gaussian noise of the given scale.
LabeledSet moons_domain(std::size_t n, double rotation_degrees, double noise_std,
                        std::uint64_t seed, DomainTag tag);

// Source at rotation 0, target rotated, independent sub-seeds per domain.
DomainTriple gen_two_moons(std::size_t n_per_domain, double rotation_degrees,
                           double noise_std, std::uint64_t seed);

// K unit-variance isotropic Gaussians at random centers in [-5, 5]^D; the
// target domain translates every center by `shift`.
DomainTriple gen_gaussian_blobs(std::size_t n_per_domain, std::size_t k,
                                std::size_t d, const std::vector<double>& shift,
                                std::uint64_t seed);

// Per-feature affine map fitted on source statistics only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std_dev;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

}  // namespace ebst
