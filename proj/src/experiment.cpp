#include "ebst/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ebst/csv.hpp"
#include "ebst/energy.hpp"
#include "ebst/text.hpp"

namespace ebst {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kStreamParamInit = 10;

}  // namespace

PreparedData load_data(const ExperimentConfig& cfg) {
  PreparedData data;
  if (cfg.generator == "two_moons") {
    DomainTriple t = gen_two_moons(cfg.n_per_domain, cfg.rotation_degrees,
                                   cfg.noise_std, cfg.seed);
    data.source = std::move(t.source);
    data.target = std::move(t.target);
    data.target_eval = std::move(t.target_eval);
    data.has_eval = true;
  } else if (cfg.generator == "blobs") {
    DomainTriple t = gen_gaussian_blobs(cfg.n_per_domain, cfg.blob_k, cfg.blob_d,
                                        cfg.blob_shift, cfg.seed);
    data.source = std::move(t.source);
    data.target = std::move(t.target);
    data.target_eval = std::move(t.target_eval);
    data.has_eval = true;
  } else if (cfg.generator == "csv") {
    CsvSchema schema;
    schema.feature_columns = cfg.feature_columns;
    schema.label_column = cfg.label_column;
    schema.classes = cfg.classes;
    data.source = load_labeled_csv(cfg.source_csv, schema, DomainTag::Source);
    CsvSchema unlabeled = schema;
    unlabeled.label_column.clear();
    data.target = load_unlabeled_csv(cfg.target_csv, unlabeled);
    if (!cfg.eval_csv.empty()) {
      data.target_eval =
          load_labeled_csv(cfg.eval_csv, schema, DomainTag::TargetEval);
      data.has_eval = true;
    }
  } else {
    throw std::runtime_error("unknown generator: " + cfg.generator);
  }
  data.n_classes = data.source.n_classes;
  return data;
}

void standardize_data(PreparedData& data) {
  Standardizer st = Standardizer::fit(data.source.features);
  data.source.features = st.apply(data.source.features);
  data.target.features = st.apply(data.target.features);
  if (data.has_eval) data.target_eval.features = st.apply(data.target_eval.features);
}

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string csv_field(double v) { return format_double(v); }

void write_metrics_row(std::ostream& out, const RoundReport& r,
                       std::size_t n_classes) {
  out << r.round << ',' << csv_field(r.target_mean_acc);
  for (std::size_t c = 0; c < n_classes; ++c)
    out << ','
        << csv_field(c < r.target_per_class_acc.size()
                         ? r.target_per_class_acc[c]
                         : std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < n_classes; ++c)
    out << ','
        << (c < r.selected_per_class.size()
                ? std::to_string(r.selected_per_class[c])
                : "0");
  for (std::size_t c = 0; c < n_classes; ++c)
    out << ','
        << csv_field(c < r.thresholds.lambda.size() ? r.thresholds.lambda[c]
                                                    : 0.0);
  out << ',' << csv_field(r.mean_target_energy) << ','
      << csv_field(r.mean_neg_energy) << ',' << r.divergent_chains << ','
      << csv_field(r.seconds) << '\n';
}

}  // namespace

void write_metrics_csv(const std::string& path, std::size_t n_classes,
                       const RoundReport& baseline,
                       const std::vector<RoundReport>& rounds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << "round,mean_acc";
  for (std::size_t c = 0; c < n_classes; ++c) out << ",acc_class_" << c;
  for (std::size_t c = 0; c < n_classes; ++c) out << ",selected_" << c;
  for (std::size_t c = 0; c < n_classes; ++c) out << ",lambda_" << c;
  out << ",mean_energy,mean_neg_energy,divergent_chains,seconds\n";
  write_metrics_row(out, baseline, n_classes);
  for (const RoundReport& r : rounds) write_metrics_row(out, r, n_classes);
  if (!out) throw std::runtime_error("metrics write failed: " + path);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  const std::string cfg_path = (fs::path(out_dir) / "config.txt").string();
  // Writing the resolved config first also proves the directory is writable
  // before any training starts.
  write_text_file(cfg_path, cfg.serialize());

  PreparedData data = load_data(cfg);
  if (cfg.standardize) standardize_data(data);

  std::vector<std::size_t> dims;
  dims.push_back(data.source.features.cols());
  for (std::size_t h : cfg.hidden) dims.push_back(h);
  dims.push_back(data.n_classes);
  Rng init_rng = Rng(cfg.seed).fork(kStreamParamInit);
  MlpParams params = MlpParams::glorot(dims, init_rng);

  auto t0 = std::chrono::steady_clock::now();
  SgdOptimizer pretrain_opt(params, cfg.opt);
  pretrain_source(params, pretrain_opt, data.source, cfg.pretrain_epochs,
                  cfg.batch_size, cfg.seed);
  double pretrain_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  save_checkpoint(params, (fs::path(out_dir) / "checkpoint_source.txt").string());

  ExperimentResult result;
  result.baseline.round = 0;
  result.baseline.selected_per_class.assign(data.n_classes, 0);
  result.baseline.thresholds.lambda.assign(data.n_classes, 0.0);
  result.baseline.mean_target_energy = mean_energy(params, data.target.features);
  result.baseline.source_acc = evaluate(params, data.source).mean_class_acc;
  result.baseline.seconds = pretrain_seconds;
  if (data.has_eval) {
    EvalResult ev = evaluate(params, data.target_eval);
    result.baseline.target_mean_acc = ev.mean_class_acc;
    result.baseline.target_per_class_acc = ev.per_class_acc;
  }

  RoundConfig rc = cfg.round_config();
  result.rounds = run_self_training(params, data.source, data.target, rc,
                                    cfg.n_rounds, cfg.seed,
                                    data.has_eval ? &data.target_eval : nullptr);
  save_checkpoint(params, (fs::path(out_dir) / "checkpoint_final.txt").string());

  result.summary.seed = cfg.seed;
  result.summary.alpha = cfg.alpha;
  result.summary.rounds = result.rounds.size();
  result.summary.baseline_mean_acc = result.baseline.target_mean_acc;
  result.summary.final_mean_acc = result.rounds.empty()
                                      ? result.baseline.target_mean_acc
                                      : result.rounds.back().target_mean_acc;
  result.summary.improvement =
      result.summary.final_mean_acc - result.summary.baseline_mean_acc;
  result.final_params = std::move(params);

  write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), data.n_classes,
                    result.baseline, result.rounds);

  std::string summary;
  summary += "seed = " + std::to_string(result.summary.seed) + "\n";
  summary += "alpha = " + format_double(result.summary.alpha) + "\n";
  summary += "rounds = " + std::to_string(result.summary.rounds) + "\n";
  summary += "baseline_mean_acc = " + format_double(result.summary.baseline_mean_acc) + "\n";
  summary += "final_mean_acc = " + format_double(result.summary.final_mean_acc) + "\n";
  summary += "improvement = " + format_double(result.summary.improvement) + "\n";
  write_text_file((fs::path(out_dir) / "summary.txt").string(), summary);

  return result;
}

namespace {

void write_sweep_csv(const std::string& out_dir,
                     const std::vector<SweepEntry>& entries) {
  std::ofstream out(fs::path(out_dir) / "sweep.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep.csv in " + out_dir);
  out << "alpha,seed,baseline_mean_acc,final_mean_acc,improvement\n";
  for (const SweepEntry& e : entries)
    out << format_double(e.alpha) << ',' << e.seed << ','
        << format_double(e.summary.baseline_mean_acc) << ','
        << format_double(e.summary.final_mean_acc) << ','
        << format_double(e.summary.improvement) << '\n';
}

}  // namespace

std::vector<SweepEntry> sweep_alphas(const ExperimentConfig& cfg,
                                     const std::vector<double>& alphas,
                                     const std::string& out_dir) {
  if (alphas.empty()) throw std::invalid_argument("sweep: no alpha values");
  fs::create_directories(out_dir);
  std::vector<SweepEntry> entries;
  for (double a : alphas) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.alpha = a;
    SweepEntry e;
    e.alpha = a;
    e.seed = run_cfg.seed;
    e.out_dir = (fs::path(out_dir) / ("alpha_" + format_double(a))).string();
    e.summary = run_experiment(run_cfg, e.out_dir).summary;
    entries.push_back(std::move(e));
  }
  write_sweep_csv(out_dir, entries);
  return entries;
}

std::vector<SweepEntry> sweep_seeds(const ExperimentConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::string& out_dir) {
  if (seeds.empty()) throw std::invalid_argument("sweep: no seeds");
  fs::create_directories(out_dir);
  std::vector<SweepEntry> entries;
  for (std::uint64_t s : seeds) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.seed = s;
    SweepEntry e;
    e.alpha = run_cfg.alpha;
    e.seed = s;
    e.out_dir = (fs::path(out_dir) / ("seed_" + std::to_string(s))).string();
    e.summary = run_experiment(run_cfg, e.out_dir).summary;
    entries.push_back(std::move(e));
  }
  write_sweep_csv(out_dir, entries);
  return entries;
}

}  // namespace ebst
