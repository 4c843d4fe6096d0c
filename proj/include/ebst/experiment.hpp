#pragma once

#include <string>
#include <vector>

#include "ebst/config.hpp"
#include "ebst/eval.hpp"
#include "ebst/selftrain.hpp"

namespace ebst {

struct RunSummary {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::size_t rounds = 0;
  double baseline_mean_acc = 0.0;
  double final_mean_acc = 0.0;
  double improvement = 0.0;
};

struct ExperimentResult {
  RunSummary summary;
  RoundReport baseline;              // round 0: source-only model
  std::vector<RoundReport> rounds;   // adaptation rounds 1..n
  MlpParams final_params;
};

struct PreparedData {
  LabeledSet source;
  UnlabeledSet target;
  LabeledSet target_eval;
  bool has_eval = false;
  std::size_t n_classes = 0;
};

// Raw sets straight from the configured generator or CSVs.
PreparedData load_data(const ExperimentConfig& cfg);
// Source-fitted standardization applied to every set.
void standardize_data(PreparedData& data);

// Loads or generates the data, standardizes on source statistics, pretrains
// on source, runs the self-training rounds, and writes into out_dir:
//   config.txt            resolved config copy
//   checkpoint_source.txt model after source pretraining
//   checkpoint_final.txt  model after adaptation
//   metrics.csv           one row per round plus the round-0 baseline
//   summary.txt           baseline/final mean class accuracy and improvement
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

// metrics.csv column order: round, mean_acc, acc_class_0..K-1,
// selected_0..K-1, lambda_0..K-1, mean_energy, mean_neg_energy,
// divergent_chains, seconds. Everything except `seconds` (wall clock,
// diagnostic) is fixed by (config, seed).
void write_metrics_csv(const std::string& path, std::size_t n_classes,
                       const RoundReport& baseline,
                       const std::vector<RoundReport>& rounds);

struct SweepEntry {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  RunSummary summary;
};

// Independent member runs (separate output subdirectories, no shared state);
// writes <out_dir>/sweep.csv with one row per member.
std::vector<SweepEntry> sweep_alphas(const ExperimentConfig& cfg,
                                     const std::vector<double>& alphas,
                                     const std::string& out_dir);
std::vector<SweepEntry> sweep_seeds(const ExperimentConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::string& out_dir);

}  // namespace ebst
