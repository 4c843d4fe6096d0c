#pragma once

#include <span>
#include <string>
#include <vector>

#include "ebst/matrix.hpp"
#include "ebst/rng.hpp"

namespace ebst {

// Feed-forward classifier f_w: R^D -> R^K. Hidden layers use tanh, the
// output layer is linear and produces logits.
struct MlpParams {
  std::vector<std::size_t> layer_dims;      // D, hidden..., K
  std::vector<Matrix> weights;              // weights[l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;  // biases[l]: dims[l+1]

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t n_layers() const { return weights.size(); }
  std::size_t param_count() const;
  bool all_finite() const;

  static MlpParams zeros(std::vector<std::size_t> dims);
  // Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
  static MlpParams glorot(std::vector<std::size_t> dims, Rng& rng);
};

// One slot per parameter, same shapes as the MlpParams it was computed for.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const MlpParams& p);
  void add_scaled(const Gradients& other, double scale);
  void scale(double s);
  double max_abs() const;
  bool all_finite() const;
};

// Flat parameter indexing, used by the finite-difference harness and the
// checkpoint writer. Order: W0 row-major, b0, W1, b1, ...
double get_param(const MlpParams& p, std::size_t i);
void set_param(MlpParams& p, std::size_t i, double v);
double get_grad(const Gradients& g, std::size_t i);
void set_grad(Gradients& g, std::size_t i, double v);

std::vector<double> forward(const MlpParams& p, std::span<const double> x);
std::vector<double> predict_proba(const MlpParams& p, std::span<const double> x);
// Row-wise probabilities for a feature matrix (N x D in, N x K out).
Matrix predict_proba_all(const MlpParams& p, const Matrix& X);

// One training example paired with a target distribution over the K classes.
// One-hot, smoothed, and any other simplex target share this representation.
struct TrainExample {
  std::vector<double> x;
  std::vector<double> target;
};
using DistBatch = std::vector<TrainExample>;

struct CeResult {
  double loss = 0.0;
  Gradients grads;
};

// Mean cross-entropy over the batch and its exact analytic gradient.
CeResult ce_backward(const MlpParams& p, const DistBatch& batch);
// Forward-only loss with the same value as ce_backward (used as the
// reference path in gradient checks).
double ce_loss(const MlpParams& p, const DistBatch& batch);

// Internals shared with the energy module: a cached forward pass plus
// backpropagation from an arbitrary d(loss)/d(logits) seed.
struct ForwardTrace {
  // acts[0] = x, acts[l] = post-tanh hidden activations, acts.back() = logits.
  std::vector<std::vector<double>> acts;
};
ForwardTrace forward_trace(const MlpParams& p, std::span<const double> x);
// Accumulates parameter gradients into `grads`; when dx is non-null also
// writes d(loss)/d(input).
void backprop_logits(const MlpParams& p, const ForwardTrace& trace,
                     std::span<const double> dlogits, Gradients& grads,
                     std::vector<double>* dx = nullptr);

// Versioned plain-text checkpoint: header line "ebst-mlp-v1 <dims...>", then
// one line per parameter tensor with round-trip-exact decimal floats.
void save_checkpoint(const MlpParams& p, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace ebst
