#include "ebst/selftrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ebst/eval.hpp"
#include "ebst/numerics.hpp"
#include "ebst/text.hpp"

namespace ebst {

namespace {

// Stream purposes for Rng::fork inside the training loops.
constexpr std::uint64_t kStreamSourceShuffle = 1;
constexpr std::uint64_t kStreamTargetShuffle = 2;
constexpr std::uint64_t kStreamSgld = 3;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::vector<double> RoundConfig::default_portion_schedule(double init, double step,
                                                          double cap,
                                                          std::size_t rounds) {
  std::vector<double> sched;
  for (std::size_t r = 0; r < rounds; ++r)
    sched.push_back(std::min(init + step * static_cast<double>(r), cap));
  return sched;
}

double RoundConfig::portion_for_round(std::size_t round) const {
  if (portion_schedule.empty())
    throw std::invalid_argument("round config: empty portion schedule");
  return round < portion_schedule.size() ? portion_schedule[round]
                                         : portion_schedule.back();
}

void RoundConfig::validate() const {
  if (alpha < 0.0) throw std::invalid_argument("round config: alpha < 0");
  if (portion_schedule.empty())
    throw std::invalid_argument("round config: empty portion schedule");
  double prev = 0.0;
  for (double p : portion_schedule) {
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("round config: portion outside (0, 1]");
    if (p < prev)
      throw std::invalid_argument("round config: portion schedule decreases");
    prev = p;
  }
  if (smoothing_epsilon < 0.0 || smoothing_epsilon >= 1.0)
    throw std::invalid_argument("round config: smoothing_epsilon outside [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("round config: batch_size is 0");
  if (replay_capacity == 0)
    throw std::invalid_argument("round config: replay_capacity is 0");
  if (reinit_prob < 0.0 || reinit_prob > 1.0)
    throw std::invalid_argument("round config: reinit_prob outside [0, 1]");
}

std::size_t portion_count(double p, std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(p * static_cast<double>(n) + 1e-9));
}

Thresholds thresholds_from_predictions(const std::vector<std::size_t>& pred_class,
                                       const std::vector<double>& confidence,
                                       std::size_t n_classes, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("thresholds: p must be in (0, 1]");
  if (pred_class.size() != confidence.size())
    throw std::invalid_argument("thresholds: prediction/confidence size mismatch");
  if (pred_class.empty()) throw std::domain_error("thresholds: empty target set");

  std::vector<std::vector<double>> by_class(n_classes);
  for (std::size_t i = 0; i < pred_class.size(); ++i) {
    if (pred_class[i] >= n_classes)
      throw std::invalid_argument("thresholds: predicted class out of range");
    by_class[pred_class[i]].push_back(confidence[i]);
  }

  Thresholds th;
  th.portion = p;
  th.lambda.assign(n_classes, 0.0);
  for (std::size_t k = 0; k < n_classes; ++k) {
    std::vector<double>& conf = by_class[k];
    const std::size_t n_k = conf.size();
    const std::size_t m = portion_count(p, n_k);
    if (n_k == 0 || m >= n_k) continue;  // lambda stays 0: select everything
    std::sort(conf.begin(), conf.end(), std::greater<double>());
    th.lambda[k] = conf[m];  // the (m+1)-th largest
  }
  return th;
}

Thresholds thresholds_from_probs(const Matrix& probs, double p) {
  std::vector<std::size_t> pred(probs.rows());
  std::vector<double> conf(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    pred[r] = argmax(probs.row(r));
    conf[r] = probs(r, pred[r]);
  }
  return thresholds_from_predictions(pred, conf, probs.cols(), p);
}

Thresholds estimate_thresholds(const MlpParams& p, const UnlabeledSet& target,
                               double portion) {
  target.validate();
  return thresholds_from_probs(predict_proba_all(p, target.features), portion);
}

PseudoLabel solve_pseudo_label(std::span<const double> probs, const Thresholds& th) {
  if (probs.size() != th.lambda.size())
    throw std::invalid_argument("solve_pseudo_label: class count mismatch");
  const std::size_t k_total = probs.size();

  // Unbounded-ratio tier: lambda_k = 0 with positive probability.
  std::size_t best = k_total;
  bool best_unbounded = false;
  double best_score = 0.0;
  for (std::size_t k = 0; k < k_total; ++k) {
    if (th.lambda[k] == 0.0 && probs[k] > 0.0) {
      if (!best_unbounded || probs[k] > best_score) {
        best = k;
        best_score = probs[k];
        best_unbounded = true;
      }
    }
  }
  if (!best_unbounded) {
    for (std::size_t k = 0; k < k_total; ++k) {
      if (th.lambda[k] <= 0.0) continue;
      double ratio = probs[k] / th.lambda[k];
      if (best == k_total || ratio > best_score) {
        best = k;
        best_score = ratio;
      }
    }
  }

  PseudoLabel out;
  if (best == k_total) return out;  // no admissible class at all
  if (!(probs[best] > th.lambda[best])) return out;  // boundary excluded
  out.selected = true;
  out.cls = best;
  out.target.assign(k_total, 0.0);
  out.target[best] = 1.0;
  return out;
}

PseudoAssignment solve_pseudo_labels_from_probs(const Matrix& probs,
                                                const Thresholds& th) {
  PseudoAssignment assign;
  assign.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r)
    assign.push_back(solve_pseudo_label(probs.row(r), th));
  return assign;
}

PseudoAssignment solve_pseudo_labels(const MlpParams& p, const UnlabeledSet& target,
                                     const Thresholds& th) {
  target.validate();
  return solve_pseudo_labels_from_probs(predict_proba_all(p, target.features), th);
}

PseudoAssignment smooth_labels(PseudoAssignment assignment, double epsilon) {
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("smooth_labels: epsilon outside [0, 1)");
  if (epsilon == 0.0) return assignment;
  for (PseudoLabel& pl : assignment) {
    if (!pl.selected) continue;
    const std::size_t k = pl.target.size();
    if (k < 2) continue;
    const double off = epsilon / static_cast<double>(k - 1);
    std::fill(pl.target.begin(), pl.target.end(), off);
    pl.target[pl.cls] = 1.0 - epsilon;
  }
  return assignment;
}

namespace {

DistBatch gather_source_batch(const LabeledSet& source,
                              std::span<const std::size_t> rows,
                              std::size_t n_classes) {
  DistBatch batch;
  batch.reserve(rows.size());
  for (std::size_t r : rows) {
    TrainExample ex;
    auto row = source.features.row(r);
    ex.x.assign(row.begin(), row.end());
    ex.target.assign(n_classes, 0.0);
    ex.target[source.labels[r]] = 1.0;
    batch.push_back(std::move(ex));
  }
  return batch;
}

}  // namespace

RetrainReport train_epochs(MlpParams& params, SgdOptimizer& opt,
                           const LabeledSet& source, const UnlabeledSet* target,
                           const PseudoAssignment* assignment,
                           const RoundConfig& cfg, ReplayBuffer* buffer,
                           std::uint64_t seed, std::uint64_t round_tag,
                           std::size_t epochs) {
  source.validate();
  cfg.validate();
  const std::size_t k = params.output_dim();
  if (source.n_classes != k)
    throw std::invalid_argument("train_epochs: source classes != model output");
  if (target != nullptr) {
    target->validate();
    if (assignment == nullptr || assignment->size() != target->features.rows())
      throw std::invalid_argument("train_epochs: assignment/target size mismatch");
    if (cfg.alpha > 0.0 && buffer == nullptr)
      throw std::invalid_argument("train_epochs: replay buffer required");
  }

  const Rng run_rng(seed);
  const std::size_t n_src = source.features.rows();
  const std::size_t n_tgt = target != nullptr ? target->features.rows() : 0;
  const std::size_t batch = cfg.batch_size;
  const std::size_t n_src_batches = ceil_div(n_src, batch);
  const std::size_t n_tgt_batches = target != nullptr ? ceil_div(n_tgt, batch) : 0;
  const std::size_t steps_per_epoch = std::max(n_src_batches, n_tgt_batches);

  RetrainReport report;
  double neg_energy_sum = 0.0;
  std::size_t neg_calls = 0;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::size_t> src_perm =
        run_rng.fork(substream(kStreamSourceShuffle, round_tag, epoch))
            .permutation(n_src);
    std::vector<std::size_t> tgt_perm;
    if (target != nullptr)
      tgt_perm = run_rng.fork(substream(kStreamTargetShuffle, round_tag, epoch))
                     .permutation(n_tgt);

    double loss_acc = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      Gradients total = Gradients::zeros_like(params);
      double loss = 0.0;

      const std::size_t sb = step % n_src_batches;
      const std::size_t s_lo = sb * batch;
      const std::size_t s_hi = std::min(s_lo + batch, n_src);
      DistBatch src_batch = gather_source_batch(
          source, std::span(src_perm).subspan(s_lo, s_hi - s_lo), k);
      CeResult src = ce_backward(params, src_batch);
      total.add_scaled(src.grads, 1.0);
      loss += src.loss;

      if (target != nullptr) {
        const std::size_t tb = step % n_tgt_batches;
        const std::size_t t_lo = tb * batch;
        const std::size_t t_hi = std::min(t_lo + batch, n_tgt);
        auto rows = std::span(tgt_perm).subspan(t_lo, t_hi - t_lo);

        // Pseudo-label CE over the selected members, weighted so the term is
        // sum over selected / batch size: unselected samples contribute zero,
        // matching the objective's sum over all target samples.
        DistBatch sel;
        for (std::size_t r : rows) {
          const PseudoLabel& pl = (*assignment)[r];
          if (!pl.selected) continue;
          TrainExample ex;
          auto row = target->features.row(r);
          ex.x.assign(row.begin(), row.end());
          ex.target = pl.target;
          sel.push_back(std::move(ex));
        }
        if (!sel.empty()) {
          CeResult pl = ce_backward(params, sel);
          const double scale = static_cast<double>(sel.size()) /
                               static_cast<double>(rows.size());
          total.add_scaled(pl.grads, scale);
          loss += pl.loss * scale;
        }

        if (cfg.alpha > 0.0) {
          Matrix feats(rows.size(), target->features.cols());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            auto row = target->features.row(rows[i]);
            std::copy(row.begin(), row.end(), feats.row(i).begin());
          }
          Rng sgld_rng =
              run_rng.fork(substream(kStreamSgld, round_tag, epoch, step));
          auto [stats, reg] = regularizer_grad(params, feats, cfg.mode, cfg.sgld,
                                               *buffer, sgld_rng, cfg.alpha);
          total.add_scaled(reg, 1.0);
          loss += cfg.alpha * stats.data_energy;
          if (stats.n_negatives > 0) {
            neg_energy_sum += stats.neg_energy;
            ++neg_calls;
            report.divergent_restarts += stats.divergent_restarts;
          }
        }
      }

      opt.step(params, total);
      loss_acc += loss;
    }
    report.epoch_losses.push_back(loss_acc /
                                  static_cast<double>(steps_per_epoch));
  }
  if (neg_calls > 0)
    report.mean_neg_energy = neg_energy_sum / static_cast<double>(neg_calls);
  return report;
}

std::vector<double> pretrain_source(MlpParams& params, SgdOptimizer& opt,
                                    const LabeledSet& source, std::size_t epochs,
                                    std::size_t batch_size, std::uint64_t seed) {
  RoundConfig cfg;
  cfg.batch_size = batch_size;
  return train_epochs(params, opt, source, nullptr, nullptr, cfg, nullptr, seed,
                      kPretrainTag, epochs)
      .epoch_losses;
}

RetrainReport retrain_step(MlpParams& params, SgdOptimizer& opt,
                           const LabeledSet& source, const UnlabeledSet& target,
                           const PseudoAssignment& assignment,
                           const RoundConfig& cfg, ReplayBuffer& buffer,
                           std::uint64_t seed, std::size_t round) {
  return train_epochs(params, opt, source, &target, &assignment, cfg, &buffer,
                      seed, round, cfg.epochs_per_round);
}

void fill_init_bounds(SgldConfig& cfg, const Matrix& target_features) {
  const std::size_t d = target_features.cols();
  cfg.init_lo.assign(d, 0.0);
  cfg.init_hi.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double lo = target_features(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < target_features.rows(); ++r) {
      lo = std::min(lo, target_features(r, c));
      hi = std::max(hi, target_features(r, c));
    }
    const double pad = 0.1 * (hi - lo);
    cfg.init_lo[c] = lo - pad;
    cfg.init_hi[c] = hi + pad;
  }
}

std::vector<RoundReport> run_self_training(MlpParams& params,
                                           const LabeledSet& source,
                                           const UnlabeledSet& target,
                                           const RoundConfig& cfg,
                                           std::size_t n_rounds,
                                           std::uint64_t seed,
                                           const LabeledSet* target_eval) {
  source.validate();
  target.validate();
  cfg.validate();
  std::vector<RoundReport> reports;
  if (n_rounds == 0) return reports;

  RoundConfig rcfg = cfg;
  if (rcfg.mode == RegularizerMode::MaximumLikelihood &&
      rcfg.sgld.init_lo.empty())
    fill_init_bounds(rcfg.sgld, target.features);
  ReplayBuffer buffer(rcfg.replay_capacity, rcfg.reinit_prob);
  SgdOptimizer opt(params, rcfg.opt);
  const std::size_t k = params.output_dim();

  for (std::size_t round = 0; round < n_rounds; ++round) {
    auto t0 = std::chrono::steady_clock::now();
    RoundReport rep;
    rep.round = round + 1;  // 0 is reserved for the source-only baseline row

    const double p = rcfg.portion_for_round(round);
    Matrix probs = predict_proba_all(params, target.features);
    Thresholds th = thresholds_from_probs(probs, p);
    PseudoAssignment assign = solve_pseudo_labels_from_probs(probs, th);
    if (rcfg.smoothing_epsilon > 0.0)
      assign = smooth_labels(std::move(assign), rcfg.smoothing_epsilon);

    rep.thresholds = th;
    rep.selected_per_class.assign(k, 0);
    rep.predicted_per_class.assign(k, 0);
    for (std::size_t i = 0; i < assign.size(); ++i) {
      ++rep.predicted_per_class[argmax(probs.row(i))];
      if (assign[i].selected) ++rep.selected_per_class[assign[i].cls];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (rep.selected_per_class[c] >
          portion_count(p, rep.predicted_per_class[c]))
        throw std::logic_error(
            "class-balance bound violated for class " + std::to_string(c) +
            " in round " + std::to_string(rep.round) + ": selected " +
            std::to_string(rep.selected_per_class[c]) + " > floor(" +
            format_double(p) + " * " +
            std::to_string(rep.predicted_per_class[c]) + ")");
    }

    RetrainReport rr = retrain_step(params, opt, source, target, assign, rcfg,
                                    buffer, seed, round);
    rep.epoch_losses = std::move(rr.epoch_losses);
    rep.mean_neg_energy = rr.mean_neg_energy;
    rep.divergent_chains = rr.divergent_restarts;
    rep.mean_target_energy = mean_energy(params, target.features);
    rep.source_acc = evaluate(params, source).mean_class_acc;
    if (target_eval != nullptr) {
      EvalResult ev = evaluate(params, *target_eval);
      rep.target_mean_acc = ev.mean_class_acc;
      rep.target_per_class_acc = ev.per_class_acc;
    }
    rep.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace ebst
