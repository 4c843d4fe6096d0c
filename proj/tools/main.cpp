#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ebst/csv.hpp"
#include "ebst/experiment.hpp"
#include "ebst/gradcheck.hpp"
#include "ebst/text.hpp"

namespace {

namespace fs = std::filesystem;

ebst::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ebst::ExperimentConfig{};
  return ebst::ExperimentConfig::load(path);
}

void apply_overrides(ebst::ExperimentConfig& cfg, const std::string& seed,
                     const std::string& alpha) {
  if (!seed.empty()) {
    std::uint64_t s;
    if (!ebst::parse_u64(seed, s)) throw std::runtime_error("bad --seed value");
    cfg.seed = s;
  }
  if (!alpha.empty()) {
    double a;
    if (!ebst::parse_double(alpha, a) || a < 0.0)
      throw std::runtime_error("bad --alpha value");
    cfg.alpha = a;
  }
}

int cmd_generate_data(const ebst::ExperimentConfig& cfg, const std::string& out) {
  if (cfg.generator == "csv")
    throw std::runtime_error("generate-data needs a synthetic data.generator");
  ebst::PreparedData data = ebst::load_data(cfg);
  fs::create_directories(out);
  const std::size_t d = data.source.features.cols();
  ebst::CsvSchema labeled = ebst::CsvSchema::generated(d, data.n_classes, true);
  ebst::CsvSchema unlabeled = ebst::CsvSchema::generated(d, data.n_classes, false);
  ebst::save_csv((fs::path(out) / "source.csv").string(), data.source.features,
                 &data.source.labels, labeled);
  ebst::save_csv((fs::path(out) / "target.csv").string(), data.target.features,
                 nullptr, unlabeled);
  ebst::save_csv((fs::path(out) / "target_eval.csv").string(),
                 data.target_eval.features, &data.target_eval.labels, labeled);
  std::cout << "wrote source.csv, target.csv, target_eval.csv to " << out << "\n";
  return 0;
}

int cmd_train_source(const ebst::ExperimentConfig& cfg, const std::string& out) {
  ebst::PreparedData data = ebst::load_data(cfg);
  if (cfg.standardize) ebst::standardize_data(data);
  std::vector<std::size_t> dims{data.source.features.cols()};
  for (std::size_t h : cfg.hidden) dims.push_back(h);
  dims.push_back(data.n_classes);
  ebst::Rng init_rng = ebst::Rng(cfg.seed).fork(10);
  ebst::MlpParams params = ebst::MlpParams::glorot(dims, init_rng);
  ebst::SgdOptimizer opt(params, cfg.opt);
  std::vector<double> losses = ebst::pretrain_source(
      params, opt, data.source, cfg.pretrain_epochs, cfg.batch_size, cfg.seed);
  fs::create_directories(out);
  const std::string ckpt = (fs::path(out) / "checkpoint_source.txt").string();
  ebst::save_checkpoint(params, ckpt);
  std::cout << "pretrain_epochs = " << losses.size() << "\n";
  if (!losses.empty())
    std::cout << "final_epoch_loss = " << ebst::format_double(losses.back()) << "\n";
  std::cout << "checkpoint = " << ckpt << "\n";
  return 0;
}

int cmd_adapt(const ebst::ExperimentConfig& cfg, const std::string& out) {
  ebst::ExperimentResult res = ebst::run_experiment(cfg, out);
  std::cout << "baseline_mean_acc = "
            << ebst::format_double(res.summary.baseline_mean_acc) << "\n"
            << "final_mean_acc = "
            << ebst::format_double(res.summary.final_mean_acc) << "\n"
            << "improvement = " << ebst::format_double(res.summary.improvement)
            << "\n"
            << "metrics = " << (fs::path(out) / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_csv,
                 const std::string& config_path,
                 const std::string& standardize_on) {
  ebst::MlpParams params = ebst::load_checkpoint(checkpoint);
  ebst::CsvSchema schema;
  if (!config_path.empty()) {
    ebst::ExperimentConfig cfg = ebst::ExperimentConfig::load(config_path);
    if (cfg.generator == "csv") {
      schema.feature_columns = cfg.feature_columns;
      schema.label_column = cfg.label_column;
      schema.classes = cfg.classes;
    } else {
      schema = ebst::CsvSchema::generated(params.input_dim(), params.output_dim(),
                                          true);
    }
  } else {
    schema = ebst::CsvSchema::generated(params.input_dim(), params.output_dim(),
                                        true);
  }
  ebst::LabeledSet eval_set =
      ebst::load_labeled_csv(data_csv, schema, ebst::DomainTag::TargetEval);
  if (!standardize_on.empty()) {
    ebst::LabeledSet fit_set =
        ebst::load_labeled_csv(standardize_on, schema, ebst::DomainTag::Source);
    ebst::Standardizer st = ebst::Standardizer::fit(fit_set.features);
    eval_set.features = st.apply(eval_set.features);
  }
  ebst::EvalResult res = ebst::evaluate(params, eval_set);
  std::cout << "n = " << eval_set.features.rows() << "\n";
  for (std::size_t c = 0; c < res.per_class_acc.size(); ++c)
    std::cout << "acc_class_" << c << " = "
              << ebst::format_double(res.per_class_acc[c]) << "\n";
  std::cout << "mean_class_acc = " << ebst::format_double(res.mean_class_acc)
            << "\n";
  return 0;
}

int cmd_gradcheck(std::size_t configs, std::uint64_t seed) {
  ebst::GradcheckReport report = ebst::run_gradcheck_suite(configs, seed);
  std::cout << "configs = " << report.configs << "\n"
            << "checks = " << report.checks << "\n"
            << "worst_rel_err = " << ebst::format_double(report.worst) << "\n";
  for (const std::string& f : report.failures) std::cout << "FAIL " << f << "\n";
  std::cout << (report.ok() ? "gradcheck passed" : "gradcheck FAILED") << "\n";
  return report.ok() ? 0 : 1;
}

int cmd_sweep(const ebst::ExperimentConfig& cfg, const std::string& out,
              const std::vector<double>& alphas,
              const std::vector<std::uint64_t>& seeds) {
  if (alphas.empty() == seeds.empty())
    throw std::runtime_error("sweep needs exactly one of --alphas / --seeds");
  std::vector<ebst::SweepEntry> entries =
      alphas.empty() ? ebst::sweep_seeds(cfg, seeds, out)
                     : ebst::sweep_alphas(cfg, alphas, out);
  for (const ebst::SweepEntry& e : entries)
    std::cout << "alpha=" << ebst::format_double(e.alpha) << " seed=" << e.seed
              << " baseline=" << ebst::format_double(e.summary.baseline_mean_acc)
              << " final=" << ebst::format_double(e.summary.final_mean_acc)
              << " improvement=" << ebst::format_double(e.summary.improvement)
              << "\n";
  std::cout << "sweep_csv = " << (fs::path(out) / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-constrained self-training for unsupervised domain adaptation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_override, alpha_override;
  std::string checkpoint, data_csv, standardize_on;
  std::size_t gc_configs = 120;
  std::uint64_t gc_seed = 1234;
  std::vector<double> sweep_alpha_list;
  std::vector<std::uint64_t> sweep_seed_list;

  CLI::App* gen = app.add_subcommand("generate-data", "emit CSVs from a synthetic generator");
  gen->add_option("--config", config_path, "config file");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed_override, "seed override");

  CLI::App* train = app.add_subcommand("train-source", "pretrain on source and write a checkpoint");
  train->add_option("--config", config_path, "config file");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed_override, "seed override");

  CLI::App* adapt = app.add_subcommand("adapt", "full self-training run");
  adapt->add_option("--config", config_path, "config file");
  adapt->add_option("--out", out_dir, "output directory")->required();
  adapt->add_option("--seed", seed_override, "seed override");
  adapt->add_option("--alpha", alpha_override, "alpha override");

  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a labeled CSV");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data_csv, "labeled CSV")->required();
  eval->add_option("--config", config_path, "config file providing the CSV schema");
  eval->add_option("--standardize-on", standardize_on,
                   "fit a source-statistics standardizer on this CSV first");

  CLI::App* gc = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
  gc->add_option("--configs", gc_configs, "number of random configurations");
  gc->add_option("--seed", gc_seed, "suite seed");

  CLI::App* sweep = app.add_subcommand("sweep", "repeat adapt over alphas or seeds");
  sweep->add_option("--config", config_path, "config file");
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--alphas", sweep_alpha_list, "alpha values")->delimiter(',');
  sweep->add_option("--seeds", sweep_seed_list, "seed values")->delimiter(',');
  sweep->add_option("--seed", seed_override, "base seed override");
  sweep->add_option("--alpha", alpha_override, "base alpha override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    ebst::ExperimentConfig cfg = load_config(config_path);
    apply_overrides(cfg, seed_override, alpha_override);
    if (app.got_subcommand(gen)) return cmd_generate_data(cfg, out_dir);
    if (app.got_subcommand(train)) return cmd_train_source(cfg, out_dir);
    if (app.got_subcommand(adapt)) return cmd_adapt(cfg, out_dir);
    if (app.got_subcommand(eval))
      return cmd_evaluate(checkpoint, data_csv, config_path, standardize_on);
    if (app.got_subcommand(gc)) return cmd_gradcheck(gc_configs, gc_seed);
    if (app.got_subcommand(sweep))
      return cmd_sweep(cfg, out_dir, sweep_alpha_list, sweep_seed_list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
