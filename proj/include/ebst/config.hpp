#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebst/optimizer.hpp"
#include "ebst/selftrain.hpp"

namespace ebst {

// Flat key-value experiment configuration with dotted sections. The resolved
// config is copied verbatim into every run directory, and serialize() emits
// keys in one canonical order so a round trip is byte-stable.
struct ExperimentConfig {
  std::uint64_t seed = 42;

  // data
  std::string generator = "two_moons";  // two_moons | blobs | csv
  std::size_t n_per_domain = 1000;
  double rotation_degrees = 30.0;
  double noise_std = 0.1;
  std::size_t blob_k = 3;
  std::size_t blob_d = 2;
  std::vector<double> blob_shift = {2.0, 0.0};
  std::string source_csv;
  std::string target_csv;
  std::string eval_csv;
  std::vector<std::string> feature_columns;
  std::string label_column = "label";
  std::vector<std::string> classes;
  bool standardize = true;

  // model
  std::vector<std::size_t> hidden = {32};

  // optimizer
  SgdConfig opt;

  // source pretraining
  std::size_t pretrain_epochs = 30;

  // self-training rounds
  std::size_t n_rounds = 5;
  double alpha = 1.0;
  double portion_init = 0.2;
  double portion_step = 0.05;
  double portion_max = 0.5;
  double smoothing_epsilon = 0.0;
  std::size_t epochs_per_round = 10;
  std::size_t batch_size = 64;

  // energy regularizer
  std::string energy_mode = "max_likelihood";  // max_likelihood | literal
  std::size_t sgld_steps = 20;
  double sgld_step_size = 0.01;
  double sgld_noise_std = 0.01;
  bool proper_sgld = false;
  std::size_t replay_capacity = 10000;
  double reinit_prob = 0.05;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string serialize() const;

  // RoundConfig with the portion schedule expanded for n_rounds.
  RoundConfig round_config() const;
  RegularizerMode regularizer_mode() const;
  void validate() const;
};

}  // namespace ebst
