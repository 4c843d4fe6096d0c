#include "ebst/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ebst/numerics.hpp"

namespace ebst {

double energy(const MlpParams& p, std::span<const double> x) {
  return -log_sum_exp(forward(p, x));
}

double joint_energy(const MlpParams& p, std::span<const double> x, std::size_t k) {
  std::vector<double> logits = forward(p, x);
  if (k >= logits.size())
    throw std::invalid_argument("joint_energy: class index out of range");
  return -logits[k];
}

double mean_energy(const MlpParams& p, const Matrix& X) {
  if (X.rows() == 0) throw std::domain_error("mean_energy: empty batch");
  double acc = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) acc += energy(p, X.row(r));
  return acc / static_cast<double>(X.rows());
}

Gradients energy_grad_params(const MlpParams& p, const Matrix& batch) {
  if (batch.rows() == 0)
    throw std::domain_error("energy_grad_params: empty batch");
  Gradients grads = Gradients::zeros_like(p);
  const double inv_b = 1.0 / static_cast<double>(batch.rows());
  std::vector<double> dlogits(p.output_dim());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    ForwardTrace trace = forward_trace(p, batch.row(r));
    std::vector<double> probs = softmax(trace.acts.back());
    for (std::size_t k = 0; k < probs.size(); ++k)
      dlogits[k] = -probs[k] * inv_b;
    backprop_logits(p, trace, dlogits, grads);
  }
  return grads;
}

std::vector<double> energy_grad_input(const MlpParams& p,
                                      std::span<const double> x) {
  ForwardTrace trace = forward_trace(p, x);
  std::vector<double> probs = softmax(trace.acts.back());
  std::vector<double> dlogits(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) dlogits[k] = -probs[k];
  Gradients scratch = Gradients::zeros_like(p);
  std::vector<double> dx;
  backprop_logits(p, trace, dlogits, scratch, &dx);
  return dx;
}

double SgldConfig::effective_noise_std() const {
  return proper_sgld ? std::sqrt(2.0 * step_size) : noise_std;
}

void SgldConfig::validate() const {
  if (step_size <= 0.0)
    throw std::invalid_argument("sgld: step_size must be positive");
  if (noise_std < 0.0)
    throw std::invalid_argument("sgld: noise_std must be non-negative");
  if (init_lo.size() != init_hi.size())
    throw std::invalid_argument("sgld: init bound dimensions disagree");
  if (init_lo.empty())
    throw std::invalid_argument("sgld: init bounds are unset");
  for (std::size_t i = 0; i < init_lo.size(); ++i)
    if (!(init_lo[i] <= init_hi[i]))
      throw std::invalid_argument("sgld: init_lo exceeds init_hi");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double reinit_prob)
    : capacity_(capacity), reinit_prob_(reinit_prob) {
  if (capacity == 0)
    throw std::invalid_argument("replay buffer: capacity must be positive");
  if (reinit_prob < 0.0 || reinit_prob > 1.0)
    throw std::invalid_argument("replay buffer: reinit_prob must be in [0, 1]");
}

void ReplayBuffer::push(std::vector<double> sample) {
  if (!all_finite(sample))
    throw std::invalid_argument("replay buffer: non-finite sample");
  store_.push_back(std::move(sample));
  while (store_.size() > capacity_) store_.pop_front();
}

namespace {

std::vector<double> uniform_init(const SgldConfig& cfg, Rng& rng) {
  std::vector<double> x(cfg.init_lo.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = rng.uniform(cfg.init_lo[i], cfg.init_hi[i]);
  return x;
}

}  // namespace

SgldResult sgld_sample_with(const EnergyGradFn& grad_fn, const SgldConfig& cfg,
                            ReplayBuffer& buffer, Rng& rng, std::size_t n,
                            const SgldObserver& observer) {
  if (n == 0) throw std::invalid_argument("sgld_sample: n must be >= 1");
  cfg.validate();
  const double noise = cfg.effective_noise_std();
  SgldResult result;
  result.samples.reserve(n);
  // One parent draw decorrelates successive calls; chain streams then only
  // depend on (that draw, chain index), so chains may run in any order.
  Rng base(rng.next_u64());
  for (std::size_t chain = 0; chain < n; ++chain) {
    Rng crng = base.fork(chain);
    std::vector<double> x;
    if (buffer.size() > 0 && crng.uniform() >= buffer.reinit_prob())
      x = buffer.at(crng.index_below(buffer.size()));
    else
      x = uniform_init(cfg, crng);
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
      std::vector<double> g = grad_fn(x);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += -cfg.step_size * g[i] + noise * crng.gaussian();
      if (!all_finite(x)) {
        x = uniform_init(cfg, crng);
        ++result.divergent_restarts;
      } else {
        // Project back into the data box. The model energy decreases without
        // bound away from the data on an unbounded input space, so free
        // chains would run off; sampling the box-constrained density keeps
        // the negative phase on the region the classifier actually sees.
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = std::clamp(x[i], cfg.init_lo[i], cfg.init_hi[i]);
      }
      if (observer) observer(chain, step, x);
    }
    buffer.push(x);
    result.samples.push_back(std::move(x));
  }
  return result;
}

SgldResult sgld_sample(const MlpParams& p, const SgldConfig& cfg,
                       ReplayBuffer& buffer, Rng& rng, std::size_t n) {
  return sgld_sample_with(
      [&p](std::span<const double> x) { return energy_grad_input(p, x); }, cfg,
      buffer, rng, n);
}

std::pair<RegStats, Gradients> regularizer_grad(
    const MlpParams& p, const Matrix& target_batch, RegularizerMode mode,
    const SgldConfig& cfg, ReplayBuffer& buffer, Rng& rng, double alpha) {
  if (alpha < 0.0)
    throw std::invalid_argument("regularizer_grad: alpha must be >= 0");
  if (target_batch.rows() == 0)
    throw std::domain_error("regularizer_grad: empty batch");

  RegStats stats;
  stats.data_energy = mean_energy(p, target_batch);
  Gradients grads = Gradients::zeros_like(p);
  if (alpha == 0.0) return {stats, grads};

  grads = energy_grad_params(p, target_batch);
  grads.scale(alpha);
  if (mode == RegularizerMode::MaximumLikelihood) {
    SgldResult negs = sgld_sample(p, cfg, buffer, rng, target_batch.rows());
    Matrix neg = Matrix::from_rows(negs.samples);
    stats.n_negatives = neg.rows();
    stats.divergent_restarts = negs.divergent_restarts;
    stats.neg_energy = mean_energy(p, neg);
    grads.add_scaled(energy_grad_params(p, neg), -alpha);
  }
  return {stats, grads};
}

}  // namespace ebst
