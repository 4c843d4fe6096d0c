#include "ebst/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ebst/text.hpp"

namespace ebst {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += ',';
    out += parts[i];
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::vector<std::string> parts;
  for (double v : values) parts.push_back(format_double(v));
  return join(parts);
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::vector<std::string> parts;
  for (std::size_t v : values) parts.push_back(std::to_string(v));
  return join(parts);
}

std::vector<std::string> parse_string_list(std::string_view value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  for (const std::string& part : split(value, ','))
    out.emplace_back(trim(part));
  return out;
}

double to_double(const std::string& key, std::string_view value) {
  double v;
  if (!parse_double(trim(value), v))
    throw std::runtime_error("config: bad number for '" + key + "'");
  return v;
}

std::size_t to_size(const std::string& key, std::string_view value) {
  std::uint64_t v;
  if (!parse_u64(trim(value), v))
    throw std::runtime_error("config: bad count for '" + key + "'");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, std::string_view value) {
  std::string_view t = trim(value);
  if (t == "true") return true;
  if (t == "false") return false;
  throw std::runtime_error("config: bad bool for '" + key + "' (true|false)");
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));

    if (key == "seed") {
      std::uint64_t v;
      if (!parse_u64(value, v))
        throw std::runtime_error("config: bad seed");
      cfg.seed = v;
    } else if (key == "data.generator") {
      cfg.generator = value;
    } else if (key == "data.n_per_domain") {
      cfg.n_per_domain = to_size(key, value);
    } else if (key == "data.rotation_degrees") {
      cfg.rotation_degrees = to_double(key, value);
    } else if (key == "data.noise_std") {
      cfg.noise_std = to_double(key, value);
    } else if (key == "data.blob_k") {
      cfg.blob_k = to_size(key, value);
    } else if (key == "data.blob_d") {
      cfg.blob_d = to_size(key, value);
    } else if (key == "data.blob_shift") {
      cfg.blob_shift.clear();
      for (const std::string& part : parse_string_list(value))
        cfg.blob_shift.push_back(to_double(key, part));
    } else if (key == "data.source_csv") {
      cfg.source_csv = value;
    } else if (key == "data.target_csv") {
      cfg.target_csv = value;
    } else if (key == "data.eval_csv") {
      cfg.eval_csv = value;
    } else if (key == "data.feature_columns") {
      cfg.feature_columns = parse_string_list(value);
    } else if (key == "data.label_column") {
      cfg.label_column = value;
    } else if (key == "data.classes") {
      cfg.classes = parse_string_list(value);
    } else if (key == "data.standardize") {
      cfg.standardize = to_bool(key, value);
    } else if (key == "model.hidden") {
      cfg.hidden.clear();
      for (const std::string& part : parse_string_list(value))
        cfg.hidden.push_back(to_size(key, part));
    } else if (key == "opt.learning_rate") {
      cfg.opt.learning_rate = to_double(key, value);
    } else if (key == "opt.momentum") {
      cfg.opt.momentum = to_double(key, value);
    } else if (key == "opt.weight_decay") {
      cfg.opt.weight_decay = to_double(key, value);
    } else if (key == "pretrain.epochs") {
      cfg.pretrain_epochs = to_size(key, value);
    } else if (key == "selftrain.n_rounds") {
      cfg.n_rounds = to_size(key, value);
    } else if (key == "selftrain.alpha") {
      cfg.alpha = to_double(key, value);
    } else if (key == "selftrain.portion_init") {
      cfg.portion_init = to_double(key, value);
    } else if (key == "selftrain.portion_step") {
      cfg.portion_step = to_double(key, value);
    } else if (key == "selftrain.portion_max") {
      cfg.portion_max = to_double(key, value);
    } else if (key == "selftrain.smoothing_epsilon") {
      cfg.smoothing_epsilon = to_double(key, value);
    } else if (key == "selftrain.epochs_per_round") {
      cfg.epochs_per_round = to_size(key, value);
    } else if (key == "selftrain.batch_size") {
      cfg.batch_size = to_size(key, value);
    } else if (key == "energy.mode") {
      cfg.energy_mode = value;
    } else if (key == "energy.sgld_steps") {
      cfg.sgld_steps = to_size(key, value);
    } else if (key == "energy.sgld_step_size") {
      cfg.sgld_step_size = to_double(key, value);
    } else if (key == "energy.sgld_noise_std") {
      cfg.sgld_noise_std = to_double(key, value);
    } else if (key == "energy.proper_sgld") {
      cfg.proper_sgld = to_bool(key, value);
    } else if (key == "energy.replay_capacity") {
      cfg.replay_capacity = to_size(key, value);
    } else if (key == "energy.reinit_prob") {
      cfg.reinit_prob = to_double(key, value);
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    if (value.empty()) return;  // omitted keys keep their defaults on reload
    out << key << " = " << value << '\n';
  };
  kv("seed", std::to_string(seed));
  kv("data.generator", generator);
  kv("data.n_per_domain", std::to_string(n_per_domain));
  kv("data.rotation_degrees", format_double(rotation_degrees));
  kv("data.noise_std", format_double(noise_std));
  kv("data.blob_k", std::to_string(blob_k));
  kv("data.blob_d", std::to_string(blob_d));
  kv("data.blob_shift", join_doubles(blob_shift));
  kv("data.source_csv", source_csv);
  kv("data.target_csv", target_csv);
  kv("data.eval_csv", eval_csv);
  kv("data.feature_columns", join(feature_columns));
  kv("data.label_column", label_column);
  kv("data.classes", join(classes));
  kv("data.standardize", standardize ? "true" : "false");
  // Always emitted: an empty list is a valid (linear) model and must not
  // fall back to the default on reload.
  out << "model.hidden = " << join_sizes(hidden) << '\n';
  kv("opt.learning_rate", format_double(opt.learning_rate));
  kv("opt.momentum", format_double(opt.momentum));
  kv("opt.weight_decay", format_double(opt.weight_decay));
  kv("pretrain.epochs", std::to_string(pretrain_epochs));
  kv("selftrain.n_rounds", std::to_string(n_rounds));
  kv("selftrain.alpha", format_double(alpha));
  kv("selftrain.portion_init", format_double(portion_init));
  kv("selftrain.portion_step", format_double(portion_step));
  kv("selftrain.portion_max", format_double(portion_max));
  kv("selftrain.smoothing_epsilon", format_double(smoothing_epsilon));
  kv("selftrain.epochs_per_round", std::to_string(epochs_per_round));
  kv("selftrain.batch_size", std::to_string(batch_size));
  kv("energy.mode", energy_mode);
  kv("energy.sgld_steps", std::to_string(sgld_steps));
  kv("energy.sgld_step_size", format_double(sgld_step_size));
  kv("energy.sgld_noise_std", format_double(sgld_noise_std));
  kv("energy.proper_sgld", proper_sgld ? "true" : "false");
  kv("energy.replay_capacity", std::to_string(replay_capacity));
  kv("energy.reinit_prob", format_double(reinit_prob));
  return out.str();
}

RegularizerMode ExperimentConfig::regularizer_mode() const {
  if (energy_mode == "literal") return RegularizerMode::Literal;
  if (energy_mode == "max_likelihood") return RegularizerMode::MaximumLikelihood;
  throw std::runtime_error("config: energy.mode must be literal|max_likelihood");
}

RoundConfig ExperimentConfig::round_config() const {
  RoundConfig rc;
  rc.alpha = alpha;
  rc.portion_schedule = RoundConfig::default_portion_schedule(
      portion_init, portion_step, portion_max, std::max<std::size_t>(n_rounds, 1));
  rc.smoothing_epsilon = smoothing_epsilon;
  rc.epochs_per_round = epochs_per_round;
  rc.batch_size = batch_size;
  rc.mode = regularizer_mode();
  rc.sgld.n_steps = sgld_steps;
  rc.sgld.step_size = sgld_step_size;
  rc.sgld.noise_std = sgld_noise_std;
  rc.sgld.proper_sgld = proper_sgld;
  rc.replay_capacity = replay_capacity;
  rc.reinit_prob = reinit_prob;
  rc.opt = opt;
  return rc;
}

void ExperimentConfig::validate() const {
  if (generator != "two_moons" && generator != "blobs" && generator != "csv")
    throw std::runtime_error("config: data.generator must be two_moons|blobs|csv");
  if (generator == "csv") {
    if (source_csv.empty() || target_csv.empty())
      throw std::runtime_error("config: csv generator needs data.source_csv and data.target_csv");
    if (feature_columns.empty())
      throw std::runtime_error("config: csv generator needs data.feature_columns");
    if (classes.empty())
      throw std::runtime_error("config: csv generator needs data.classes");
  }
  regularizer_mode();
  round_config().validate();
}

}  // namespace ebst
