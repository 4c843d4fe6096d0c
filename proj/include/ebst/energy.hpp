#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ebst/mlp.hpp"
#include "ebst/rng.hpp"

namespace ebst {

// Free energy of an input under the classifier-as-EBM reading:
//   E_w(x) = -log sum_k exp(f_w(x)[k])
double energy(const MlpParams& p, std::span<const double> x);

// Joint energy of (x, y=k): -f_w(x)[k].
double joint_energy(const MlpParams& p, std::span<const double> x, std::size_t k);

// Mean of E_w over the rows of X.
double mean_energy(const MlpParams& p, const Matrix& X);

// Exact analytic gradient of the mean energy over the batch rows w.r.t. the
// parameters. d(-lse(z))/dz_k = -softmax(z)_k seeds the shared backprop.
Gradients energy_grad_params(const MlpParams& p, const Matrix& batch);

// grad_x E_w(x).
std::vector<double> energy_grad_input(const MlpParams& p, std::span<const double> x);

struct SgldConfig {
  std::size_t n_steps = 20;
  double step_size = 0.01;
  double noise_std = 0.01;
  // Standard Langevin discretization: forces noise_std = sqrt(2*step_size).
  bool proper_sgld = false;
  // Per-dimension chain initialization bounds; states are also projected
  // into this box after every step.
  std::vector<double> init_lo;
  std::vector<double> init_hi;

  double effective_noise_std() const;
  void validate() const;
};

// Pool of persisted SGLD chain states. Chains restart from here with
// probability 1 - reinit_prob; eviction at capacity is FIFO.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double reinit_prob);

  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  double reinit_prob() const { return reinit_prob_; }
  const std::vector<double>& at(std::size_t i) const { return store_[i]; }

  void push(std::vector<double> sample);

 private:
  std::size_t capacity_;
  double reinit_prob_;
  std::deque<std::vector<double>> store_;
};

struct SgldResult {
  std::vector<std::vector<double>> samples;
  std::size_t divergent_restarts = 0;
};

using EnergyGradFn =
    std::function<std::vector<double>(std::span<const double>)>;
using SgldObserver =
    std::function<void(std::size_t chain, std::size_t step, std::span<const double> x)>;

// SGLD driver against an arbitrary input-space energy gradient. Each chain
// draws its own stream from (one draw of rng, chain index), initializes from
// the buffer or uniformly over the init bounds, runs
//   x <- x - step_size * grad(x) + noise_std * eta,   eta ~ N(0, I)
// projected back into the init box after every step, and writes its final
// state back to the buffer. A chain whose state goes non-finite restarts
// from a uniform init; restarts are counted.
SgldResult sgld_sample_with(const EnergyGradFn& grad_fn, const SgldConfig& cfg,
                            ReplayBuffer& buffer, Rng& rng, std::size_t n,
                            const SgldObserver& observer = {});

// SGLD on the model energy E_w.
SgldResult sgld_sample(const MlpParams& p, const SgldConfig& cfg,
                       ReplayBuffer& buffer, Rng& rng, std::size_t n);

// Literal: gradient of alpha * mean_batch E_w(x_t), the regularizer exactly
// as it appears in the training objective.
// MaximumLikelihood: alpha * (grad E on data - grad E on SGLD negatives),
// the contrastive-divergence descent direction for -log p_w(x).
enum class RegularizerMode { Literal, MaximumLikelihood };

struct RegStats {
  double data_energy = std::numeric_limits<double>::quiet_NaN();
  double neg_energy = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_negatives = 0;
  std::size_t divergent_restarts = 0;
};

std::pair<RegStats, Gradients> regularizer_grad(
    const MlpParams& p, const Matrix& target_batch, RegularizerMode mode,
    const SgldConfig& cfg, ReplayBuffer& buffer, Rng& rng, double alpha);

}  // namespace ebst
