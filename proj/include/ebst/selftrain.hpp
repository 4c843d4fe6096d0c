#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ebst/data.hpp"
#include "ebst/energy.hpp"
#include "ebst/optimizer.hpp"

namespace ebst {

struct Thresholds {
  std::vector<double> lambda;  // per-class cutoff, each in [0, 1]
  double portion = 1.0;        // the p that produced them
};

// One target sample's pseudo-label: a simplex distribution when selected,
// nothing otherwise.
struct PseudoLabel {
  bool selected = false;
  std::size_t cls = 0;          // valid when selected
  std::vector<double> target;   // size K when selected
};
using PseudoAssignment = std::vector<PseudoLabel>;

struct RoundConfig {
  double alpha = 1.0;
  std::vector<double> portion_schedule = default_portion_schedule();
  double smoothing_epsilon = 0.0;
  std::size_t epochs_per_round = 10;
  std::size_t batch_size = 64;
  RegularizerMode mode = RegularizerMode::MaximumLikelihood;
  SgldConfig sgld;
  std::size_t replay_capacity = 10000;
  double reinit_prob = 0.05;
  SgdConfig opt;

  // p grows from `init` by `step` per round, capped at `cap`.
  static std::vector<double> default_portion_schedule(double init = 0.2,
                                                      double step = 0.05,
                                                      double cap = 0.5,
                                                      std::size_t rounds = 8);
  double portion_for_round(std::size_t round) const;
  void validate() const;
};

// floor(p * n) with a relative nudge so exactly-representable products like
// 0.3 * 10 do not round down. Single source of truth for "the most confident
// p portion", shared by the estimator and the class-balance checks.
std::size_t portion_count(double p, std::size_t n);

// Per-class cutoffs from predictions: for class k take the max-probability
// confidences of samples whose argmax class is k, sort descending; with
// m = portion_count(p, N_k), lambda_k = 0 when N_k == 0 or m >= N_k, else
// the (m+1)-th largest confidence. Strictly-above-lambda counts are <= m.
Thresholds thresholds_from_predictions(const std::vector<std::size_t>& pred_class,
                                       const std::vector<double>& confidence,
                                       std::size_t n_classes, double p);
Thresholds thresholds_from_probs(const Matrix& probs, double p);
Thresholds estimate_thresholds(const MlpParams& p, const UnlabeledSet& target,
                               double portion);

// Closed-form per-sample pseudo-label: k* = argmax_k p_k / lambda_k, one-hot
// at k* when p_{k*} > lambda_{k*} (strict), otherwise unselected. Classes
// with lambda_k = 0 have unbounded ratios: they dominate every finite ratio
// and rank among themselves by raw probability, so p = 1 selects everything.
// All ties break to the lowest class index.
PseudoLabel solve_pseudo_label(std::span<const double> probs, const Thresholds& th);
PseudoAssignment solve_pseudo_labels_from_probs(const Matrix& probs,
                                                const Thresholds& th);
PseudoAssignment solve_pseudo_labels(const MlpParams& p, const UnlabeledSet& target,
                                     const Thresholds& th);

// Selected one-hot labels become 1-eps at the pseudo-class and eps/(K-1)
// elsewhere; unselected entries pass through.
PseudoAssignment smooth_labels(PseudoAssignment assignment, double epsilon);

struct RetrainReport {
  std::vector<double> epoch_losses;  // mean per-step total loss per epoch
  double mean_neg_energy = std::numeric_limits<double>::quiet_NaN();
  std::size_t divergent_restarts = 0;
};

// Mini-batch SGD over source cross-entropy, pseudo-label cross-entropy on
// selected targets, and alpha times the energy regularizer on every target
// sample in the batch. With `target` null the loop degenerates to plain
// source training; pretraining and the alpha = 0 / nothing-selected case
// follow the identical parameter trajectory because every shuffle stream is
// derived from (seed, purpose, round_tag, epoch) rather than consumed
// sequentially.
RetrainReport train_epochs(MlpParams& params, SgdOptimizer& opt,
                           const LabeledSet& source, const UnlabeledSet* target,
                           const PseudoAssignment* assignment,
                           const RoundConfig& cfg, ReplayBuffer* buffer,
                           std::uint64_t seed, std::uint64_t round_tag,
                           std::size_t epochs);

// Round tag reserved for source-only pretraining streams.
inline constexpr std::uint64_t kPretrainTag = 0xFFFFFFFF;

std::vector<double> pretrain_source(MlpParams& params, SgdOptimizer& opt,
                                    const LabeledSet& source, std::size_t epochs,
                                    std::size_t batch_size, std::uint64_t seed);

// Step 2 retraining with the pseudo-labels held fixed.
RetrainReport retrain_step(MlpParams& params, SgdOptimizer& opt,
                           const LabeledSet& source, const UnlabeledSet& target,
                           const PseudoAssignment& assignment,
                           const RoundConfig& cfg, ReplayBuffer& buffer,
                           std::uint64_t seed, std::size_t round);

struct RoundReport {
  std::size_t round = 0;
  Thresholds thresholds;
  std::vector<std::size_t> selected_per_class;
  std::vector<std::size_t> predicted_per_class;  // argmax-class counts N_k
  double mean_target_energy = std::numeric_limits<double>::quiet_NaN();
  double mean_neg_energy = std::numeric_limits<double>::quiet_NaN();
  std::size_t divergent_chains = 0;
  double source_acc = std::numeric_limits<double>::quiet_NaN();
  double target_mean_acc = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> target_per_class_acc;
  std::vector<double> epoch_losses;
  double seconds = 0.0;
};

// One round = threshold estimation, pseudo-label generation (optionally
// smoothed), retraining. Ground-truth target labels are used only for the
// report when target_eval is supplied; they never reach training. Enforces
// the class-balance bound selected(k) <= portion_count(p, N_k) each round.
std::vector<RoundReport> run_self_training(MlpParams& params,
                                           const LabeledSet& source,
                                           const UnlabeledSet& target,
                                           const RoundConfig& cfg,
                                           std::size_t n_rounds,
                                           std::uint64_t seed,
                                           const LabeledSet* target_eval = nullptr);

// Chain-init bounds for SGLD: per-dimension min/max of the target features,
// expanded by 10% of the range on each side.
void fill_init_bounds(SgldConfig& cfg, const Matrix& target_features);

}  // namespace ebst
