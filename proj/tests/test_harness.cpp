#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ebst/config.hpp"
#include "ebst/eval.hpp"
#include "ebst/experiment.hpp"
#include "ebst/text.hpp"

using namespace ebst;

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// metrics.csv minus its wall-clock column (the one diagnostic field that is
// not fixed by (config, seed)).
std::string strip_seconds_column(const std::string& csv) {
  std::string out;
  for (const std::string& line : split(csv, '\n')) {
    if (line.empty()) continue;
    auto pos = line.rfind(',');
    REQUIRE(pos != std::string::npos);
    out += line.substr(0, pos);
    out += '\n';
  }
  return out;
}

ExperimentConfig small_cfg() {
  ExperimentConfig cfg;
  cfg.seed = 21;
  cfg.n_per_domain = 150;
  cfg.pretrain_epochs = 8;
  cfg.n_rounds = 2;
  cfg.epochs_per_round = 3;
  cfg.hidden = {8};
  return cfg;
}

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("config round-trips through serialize/parse") {
  ExperimentConfig cfg;
  cfg.seed = 777;
  cfg.generator = "blobs";
  cfg.blob_k = 4;
  cfg.blob_shift = {1.5, -2.25};
  cfg.hidden = {16, 8};
  cfg.alpha = 0.8;
  cfg.energy_mode = "max_likelihood";
  cfg.proper_sgld = true;
  std::string text = cfg.serialize();
  ExperimentConfig back = ExperimentConfig::parse(text);
  CHECK(back.serialize() == text);
  CHECK(back.seed == 777);
  CHECK(back.blob_shift == std::vector<double>{1.5, -2.25});
  CHECK(back.hidden == std::vector<std::size_t>{16, 8});
  CHECK(back.energy_mode == "max_likelihood");
  CHECK(back.proper_sgld);
}

TEST_CASE("an empty hidden list (linear model) survives the round trip") {
  ExperimentConfig cfg;
  cfg.hidden.clear();
  ExperimentConfig back = ExperimentConfig::parse(cfg.serialize());
  CHECK(back.hidden.empty());
  CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("bogus.key = 1\n"),
                       doctest::Contains("unknown key"),
                       std::runtime_error);
  CHECK_THROWS_AS(ExperimentConfig::parse("seed = banana\n"), std::runtime_error);
  CHECK_THROWS_AS(ExperimentConfig::parse("data.generator = tea_leaves\n"),
                  std::runtime_error);
  CHECK_THROWS_AS(ExperimentConfig::parse("no equals sign here\n"),
                  std::runtime_error);
  // comments and blank lines are fine
  ExperimentConfig cfg = ExperimentConfig::parse("# comment\n\nseed = 3\n");
  CHECK(cfg.seed == 3);
}

TEST_CASE("evaluate: perfect predictor and constant predictor") {
  // Linear model predicting the sign of x0.
  MlpParams p = MlpParams::zeros({1, 2});
  p.weights[0](0, 0) = -5.0;
  p.weights[0](1, 0) = 5.0;
  LabeledSet set;
  set.features = Matrix::from_rows({{-1.0}, {-2.0}, {1.0}, {2.0}});
  set.labels = {0, 0, 1, 1};
  set.n_classes = 2;
  EvalResult perfect = evaluate(p, set);
  CHECK(perfect.mean_class_acc == 1.0);
  CHECK(perfect.confusion(0, 0) == 2.0);
  CHECK(perfect.confusion(1, 1) == 2.0);
  CHECK(perfect.confusion(0, 1) == 0.0);

  // Zero model: ties broken to class 0 everywhere.
  MlpParams zero = MlpParams::zeros({1, 3});
  LabeledSet balanced;
  balanced.features = Matrix(9, 1, 0.5);
  balanced.labels = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  balanced.n_classes = 3;
  EvalResult constant = evaluate(zero, balanced);
  CHECK(constant.per_class_acc[0] == 1.0);
  CHECK(constant.per_class_acc[1] == 0.0);
  CHECK(constant.per_class_acc[2] == 0.0);
  CHECK(constant.mean_class_acc == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("evaluate cross-checked against a hand-tallied confusion matrix") {
  // Predictions of sign(x0) model on 8 hand-picked samples:
  //   x0 < 0 -> class 0, x0 >= 0 -> class 1 (tie at 0 goes to class 0).
  MlpParams p = MlpParams::zeros({1, 2});
  p.weights[0](0, 0) = -1.0;
  p.weights[0](1, 0) = 1.0;
  LabeledSet set;
  set.features =
      Matrix::from_rows({{-2.0}, {-1.0}, {0.0}, {1.0}, {2.0}, {-3.0}, {4.0}, {-0.5}});
  set.labels = {0, 0, 0, 1, 1, 1, 1, 1};
  set.n_classes = 2;
  // By hand: true 0 gets predictions {0, 0, 0}; true 1 gets {1, 1, 0, 1, 0}.
  EvalResult res = evaluate(p, set);
  CHECK(res.confusion(0, 0) == 3.0);
  CHECK(res.confusion(0, 1) == 0.0);
  CHECK(res.confusion(1, 0) == 2.0);
  CHECK(res.confusion(1, 1) == 3.0);
  CHECK(res.per_class_acc[0] == 1.0);
  CHECK(res.per_class_acc[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(res.mean_class_acc == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS([&] {
    LabeledSet bad = set;
    bad.labels[0] = 7;
    evaluate(p, bad);
  }(), std::invalid_argument);
}

TEST_CASE("run_experiment writes the full artifact set") {
  ExperimentConfig cfg = small_cfg();
  const std::string out = fresh_dir("ebst_run_artifacts");
  ExperimentResult res = run_experiment(cfg, out);
  CHECK(fs::exists(fs::path(out) / "config.txt"));
  CHECK(fs::exists(fs::path(out) / "checkpoint_source.txt"));
  CHECK(fs::exists(fs::path(out) / "checkpoint_final.txt"));
  CHECK(fs::exists(fs::path(out) / "metrics.csv"));
  CHECK(fs::exists(fs::path(out) / "summary.txt"));

  // resolved config reloads to the same run
  ExperimentConfig back = ExperimentConfig::load((fs::path(out) / "config.txt").string());
  CHECK(back.serialize() == cfg.serialize());

  // metrics: header + baseline + one row per round, fixed column count
  std::vector<std::string> lines;
  for (const std::string& l : split(read_file((fs::path(out) / "metrics.csv").string()), '\n'))
    if (!l.empty()) lines.push_back(l);
  REQUIRE(lines.size() == 1 + 1 + cfg.n_rounds);
  const std::size_t k = 2;
  const std::size_t expected_cols = 2 + 3 * k + 4;
  for (const std::string& l : lines)
    CHECK(split(l, ',').size() == expected_cols);
  CHECK(lines[0] ==
        "round,mean_acc,acc_class_0,acc_class_1,selected_0,selected_1,"
        "lambda_0,lambda_1,mean_energy,mean_neg_energy,divergent_chains,seconds");
  CHECK(split(lines[1], ',')[0] == "0");

  CHECK(res.rounds.size() == cfg.n_rounds);
  CHECK(res.summary.rounds == cfg.n_rounds);
  CHECK(res.summary.improvement ==
        doctest::Approx(res.summary.final_mean_acc -
                        res.summary.baseline_mean_acc));
  fs::remove_all(out);
}

TEST_CASE("identical configs reproduce the run byte for byte") {
  ExperimentConfig cfg = small_cfg();
  const std::string out1 = fresh_dir("ebst_det_a");
  const std::string out2 = fresh_dir("ebst_det_b");
  run_experiment(cfg, out1);
  run_experiment(cfg, out2);
  CHECK(strip_seconds_column(read_file((fs::path(out1) / "metrics.csv").string())) ==
        strip_seconds_column(read_file((fs::path(out2) / "metrics.csv").string())));
  CHECK(read_file((fs::path(out1) / "summary.txt").string()) ==
        read_file((fs::path(out2) / "summary.txt").string()));
  CHECK(read_file((fs::path(out1) / "checkpoint_final.txt").string()) ==
        read_file((fs::path(out2) / "checkpoint_final.txt").string()));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("unwritable output directory fails before any training") {
  ExperimentConfig cfg = small_cfg();
  const fs::path blocker = fs::temp_directory_path() / "ebst_not_a_dir";
  std::ofstream(blocker.string()) << "occupied";
  CHECK_THROWS(run_experiment(cfg, (blocker / "run").string()));
  fs::remove(blocker);
}

TEST_CASE("zero rounds leaves only the baseline row") {
  ExperimentConfig cfg = small_cfg();
  cfg.n_rounds = 0;
  const std::string out = fresh_dir("ebst_zero_rounds");
  ExperimentResult res = run_experiment(cfg, out);
  CHECK(res.rounds.empty());
  std::vector<std::string> lines;
  for (const std::string& l : split(read_file((fs::path(out) / "metrics.csv").string()), '\n'))
    if (!l.empty()) lines.push_back(l);
  CHECK(lines.size() == 2);  // header + baseline
  CHECK(res.summary.final_mean_acc == res.summary.baseline_mean_acc);
  fs::remove_all(out);
}

TEST_CASE("sweep members equal independent runs") {
  ExperimentConfig cfg = small_cfg();
  cfg.n_rounds = 1;
  const std::string sweep_out = fresh_dir("ebst_sweep");
  std::vector<SweepEntry> entries = sweep_seeds(cfg, {31, 32}, sweep_out);
  REQUIRE(entries.size() == 2);
  CHECK(fs::exists(fs::path(sweep_out) / "sweep.csv"));

  for (std::size_t i = 0; i < 2; ++i) {
    ExperimentConfig single = cfg;
    single.seed = entries[i].seed;
    const std::string solo = fresh_dir("ebst_sweep_solo");
    ExperimentResult res = run_experiment(single, solo);
    CHECK(res.summary.baseline_mean_acc == entries[i].summary.baseline_mean_acc);
    CHECK(res.summary.final_mean_acc == entries[i].summary.final_mean_acc);
    fs::remove_all(solo);
  }
  fs::remove_all(sweep_out);
}

TEST_CASE("alpha sweep runs each member in its own directory") {
  ExperimentConfig cfg = small_cfg();
  cfg.n_rounds = 1;
  const std::string out = fresh_dir("ebst_alpha_sweep");
  std::vector<SweepEntry> entries = sweep_alphas(cfg, {0.0, 1.0}, out);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].alpha == 0.0);
  CHECK(entries[1].alpha == 1.0);
  CHECK(fs::exists(fs::path(entries[0].out_dir) / "metrics.csv"));
  CHECK(fs::exists(fs::path(entries[1].out_dir) / "metrics.csv"));
  fs::remove_all(out);
}
