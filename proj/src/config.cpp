#include "supalign/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "supalign/error.hpp"

namespace supalign {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string_view activation_name(OutputActivation a) {
  return a == OutputActivation::kRelu ? "relu" : "none";
}

OutputActivation parse_activation(const std::string& s) {
  if (s == "relu") return OutputActivation::kRelu;
  if (s == "none") return OutputActivation::kNone;
  throw ConfigError("toy.output_activation must be \"relu\" or \"none\", got \"" + s + "\"");
}

json to_json(const ExperimentConfig& cfg, bool with_out_dir) {
  json metrics = json::array();
  for (const auto m : cfg.metrics) metrics.push_back(std::string(to_string(m)));
  json j = {
      {"experiment_id", cfg.experiment_id},
      {"M", cfg.m},
      {"F", cfg.f},
      {"p", cfg.p},
      {"N_list", cfg.n_list},
      {"data_seed", cfg.data_seed},
      {"seed_a", cfg.seed_a},
      {"seed_b", cfg.seed_b},
      {"toy",
       {{"batch_size", cfg.toy.batch_size},
        {"epochs", cfg.toy.epochs},
        {"lr", cfg.toy.lr},
        {"output_activation", std::string(activation_name(cfg.toy.output_activation))},
        {"shared_threshold", cfg.toy.shared_threshold}}},
      {"sae",
       {{"k", cfg.sae.k},
        {"F_lat", cfg.sae.f_lat},
        {"lr", cfg.sae.lr},
        {"batch_size", cfg.sae.batch_size},
        {"alpha_aux", cfg.sae.alpha_aux},
        {"dead_steps", cfg.sae.dead_steps},
        {"k_aux", cfg.sae.k_aux},
        {"epochs", cfg.sae.epochs}}},
      {"holdout", cfg.holdout},
      {"folds", cfg.folds},
      {"alpha_exponents", cfg.alpha_exponents},
      {"metrics", metrics},
      {"paper_scale", cfg.paper_scale},
  };
  if (with_out_dir) j["out_dir"] = cfg.out_dir.string();
  return j;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.m < 2) throw ConfigError("M must be at least 2");
  if (cfg.f < 2) throw ConfigError("F must be at least 2");
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) throw ConfigError("p must be in (0, 1]");
  if (cfg.n_list.empty()) throw ConfigError("N_list must not be empty");
  for (const auto n : cfg.n_list) {
    if (n < 1 || n >= cfg.f) throw ConfigError("every N must satisfy 1 <= N < F");
  }
  if (cfg.seed_a == cfg.seed_b) throw ConfigError("seed_a and seed_b must differ");
  if (!(cfg.holdout > 0.0 && cfg.holdout < 1.0)) throw ConfigError("holdout must be in (0, 1)");
  if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
  if (cfg.alpha_exponents.empty()) throw ConfigError("alpha_exponents must not be empty");
  if (cfg.metrics.empty()) throw ConfigError("metrics must not be empty");
  if (cfg.toy.batch_size < 1 || cfg.toy.epochs < 1) throw ConfigError("toy batch_size and epochs must be >= 1");
  if (!(cfg.toy.lr > 0.0)) throw ConfigError("toy.lr must be positive");
  const std::size_t f_lat = cfg.latents();
  for (const auto n : cfg.n_list) {
    if (f_lat < n) throw ConfigError("sae.F_lat must be >= every N");
  }
  if (cfg.sae.k < 1 || static_cast<std::size_t>(cfg.sae.k) > f_lat) {
    throw ConfigError("sae.k must be in [1, F_lat]");
  }
  if (cfg.sae.k_aux < 0 || static_cast<std::size_t>(cfg.sae.k_aux) > f_lat) {
    throw ConfigError("sae.k_aux must be in [0, F_lat] (0 means F_lat)");
  }
  if (cfg.sae.batch_size < 1 || cfg.sae.epochs < 1 || cfg.sae.dead_steps < 1) {
    throw ConfigError("sae batch_size, epochs and dead_steps must be >= 1");
  }
  if (!(cfg.sae.lr > 0.0) || cfg.sae.alpha_aux < 0.0) {
    throw ConfigError("sae.lr must be positive and sae.alpha_aux nonnegative");
  }
  const auto holdout_rows = static_cast<std::size_t>(static_cast<double>(cfg.m) * cfg.holdout);
  if (holdout_rows < 2 * cfg.folds || holdout_rows >= cfg.m) {
    throw ConfigError("holdout split leaves too few rows for the folds");
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"experiment_id", "M", "F", "p", "N_list", "data_seed", "seed_a", "seed_b", "toy",
                  "sae", "holdout", "folds", "alpha_exponents", "metrics", "out_dir", "paper_scale"},
                 "config");
  ExperimentConfig cfg;
  read(j, "experiment_id", cfg.experiment_id, "config");
  read(j, "M", cfg.m, "config");
  read(j, "F", cfg.f, "config");
  read(j, "p", cfg.p, "config");
  read(j, "N_list", cfg.n_list, "config");
  read(j, "data_seed", cfg.data_seed, "config");
  read(j, "seed_a", cfg.seed_a, "config");
  read(j, "seed_b", cfg.seed_b, "config");
  read(j, "holdout", cfg.holdout, "config");
  read(j, "folds", cfg.folds, "config");
  read(j, "alpha_exponents", cfg.alpha_exponents, "config");
  read(j, "paper_scale", cfg.paper_scale, "config");
  if (j.contains("out_dir")) {
    std::string dir;
    read(j, "out_dir", dir, "config");
    cfg.out_dir = dir;
  }
  if (j.contains("metrics")) {
    std::vector<std::string> names;
    read(j, "metrics", names, "config");
    cfg.metrics.clear();
    for (const auto& n : names) cfg.metrics.push_back(parse_metric(n));
  }
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    reject_unknown(t, {"batch_size", "epochs", "lr", "output_activation", "shared_threshold"}, "toy");
    read(t, "batch_size", cfg.toy.batch_size, "toy");
    read(t, "epochs", cfg.toy.epochs, "toy");
    read(t, "lr", cfg.toy.lr, "toy");
    read(t, "shared_threshold", cfg.toy.shared_threshold, "toy");
    if (t.contains("output_activation")) {
      std::string a;
      read(t, "output_activation", a, "toy");
      cfg.toy.output_activation = parse_activation(a);
    }
  }
  if (j.contains("sae")) {
    const json& s = j.at("sae");
    reject_unknown(s, {"k", "F_lat", "lr", "batch_size", "alpha_aux", "dead_steps", "k_aux", "epochs"},
                   "sae");
    read(s, "k", cfg.sae.k, "sae");
    read(s, "F_lat", cfg.sae.f_lat, "sae");
    read(s, "lr", cfg.sae.lr, "sae");
    read(s, "batch_size", cfg.sae.batch_size, "sae");
    read(s, "alpha_aux", cfg.sae.alpha_aux, "sae");
    read(s, "dead_steps", cfg.sae.dead_steps, "sae");
    read(s, "k_aux", cfg.sae.k_aux, "sae");
    read(s, "epochs", cfg.sae.epochs, "sae");
  }
  if (cfg.paper_scale) apply_paper_scale(cfg);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg, true).dump(2); }

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.paper_scale = true;
  cfg.m = 10240000;
  cfg.toy.epochs = 1;
  cfg.sae.epochs = 1;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Metric> parse_metric_list(const std::string& csv) {
  std::vector<Metric> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_metric(item));
  }
  if (out.empty()) throw ConfigError("--metrics needs at least one of semi_match, soft_match, ridge");
  return out;
}

}  // namespace supalign
