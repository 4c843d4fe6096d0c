#include "ebst/eval.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ebst/numerics.hpp"

namespace ebst {

EvalResult evaluate(const MlpParams& p, const LabeledSet& eval_set) {
  eval_set.validate();
  const std::size_t k = p.output_dim();
  if (eval_set.n_classes > k)
    throw std::invalid_argument("evaluate: label space larger than model output");
  EvalResult res;
  res.confusion = Matrix(k, k);
  for (std::size_t r = 0; r < eval_set.features.rows(); ++r) {
    std::vector<double> logits = forward(p, eval_set.features.row(r));
    std::size_t pred = argmax(logits);
    res.confusion(eval_set.labels[r], pred) += 1.0;
  }
  res.per_class_acc.assign(k, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double row_total = 0.0;
    for (std::size_t j = 0; j < k; ++j) row_total += res.confusion(c, j);
    if (row_total > 0.0) {
      res.per_class_acc[c] = res.confusion(c, c) / row_total;
      sum += res.per_class_acc[c];
      ++present;
    }
  }
  res.mean_class_acc = present > 0 ? sum / static_cast<double>(present) : 0.0;
  return res;
}

}  // namespace ebst
