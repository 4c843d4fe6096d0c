#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ebst/mlp.hpp"

namespace ebst {

// Central finite differences over the flat parameter vector. Evaluates the
// loss through forward passes only, so it stays independent of the analytic
// backward path it is used to verify.
Gradients fd_param_gradient(const MlpParams& params,
                            const std::function<double(const MlpParams&)>& loss,
                            double h = 1e-5);

std::vector<double> fd_input_gradient(
    std::span<const double> x,
    const std::function<double(std::span<const double>)>& loss, double h = 1e-5);

// Componentwise |a-b| / max(|a|, |b|, floor), maximized over all slots. The
// floor keeps near-zero components from amplifying finite-difference noise
// past genuine disagreement.
double max_rel_err(const Gradients& a, const Gradients& b, double floor_val = 1e-3);
double max_rel_err(std::span<const double> a, std::span<const double> b,
                   double floor_val = 1e-3);

struct GradcheckReport {
  std::size_t configs = 0;
  std::size_t checks = 0;
  double worst = 0.0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

// Randomized suite over small nets: source CE, pseudo-label CE, smoothed CE,
// energy gradients w.r.t. parameters and inputs, and the combined
// source + pseudo + alpha*energy retraining loss.
GradcheckReport run_gradcheck_suite(std::size_t n_configs, std::uint64_t seed,
                                    double tolerance = 1e-6, double h = 1e-5);

}  // namespace ebst
