#pragma once

#include <vector>

#include "ebst/data.hpp"
#include "ebst/mlp.hpp"

namespace ebst {

struct EvalResult {
  Matrix confusion;                   // K x K counts, row = true, col = predicted
  std::vector<double> per_class_acc;  // recall per class; NaN when a class is absent
  double mean_class_acc = 0.0;        // unweighted mean over classes present
};

// Argmax predictions (ties to the lowest class index) tallied against ground
// truth. Never mutates the model.
EvalResult evaluate(const MlpParams& p, const LabeledSet& eval_set);

}  // namespace ebst
