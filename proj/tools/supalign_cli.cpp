// supalign: command-line front end for the toy superposition / SAE alignment
// experiments. Every stage reads and writes checkpoints so it can run alone.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "supalign/checkpoint.hpp"
#include "supalign/config.hpp"
#include "supalign/error.hpp"
#include "supalign/pipeline.hpp"
#include "supalign/report.hpp"
#include "supalign/theory.hpp"

namespace fs = std::filesystem;
using namespace supalign;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed_a, seed_b;
  bool paper_scale = false;
  std::string metrics;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--seed-a", o.seed_a, "seed of the first model");
  cmd->add_option("--seed-b", o.seed_b, "seed of the second model");
  cmd->add_flag("--paper-scale", o.paper_scale, "M = 10,240,000 and one epoch");
  cmd->add_option("--metrics", o.metrics, "comma list of semi_match, soft_match, ridge");
}

ExperimentConfig resolve(const CommonOptions& o, const std::string& out) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed_a) cfg.seed_a = *o.seed_a;
  if (o.seed_b) cfg.seed_b = *o.seed_b;
  if (o.paper_scale) apply_paper_scale(cfg);
  if (!o.metrics.empty()) cfg.metrics = parse_metric_list(o.metrics);
  if (!out.empty()) cfg.out_dir = out;
  validate(cfg);
  return cfg;
}

int fail(const Error& e) {
  std::cerr << "supalign: " << e.what() << '\n';
  return static_cast<int>(e.exit_code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superposition and SAE representational-alignment experiments"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string out;

  auto* gen = app.add_subcommand("gen", "generate the feature dataset checkpoint");
  add_common(gen, common);
  gen->add_option("--out", out, "output checkpoint path")->required();

  std::string dataset_path, toy_path;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  auto* train_toy_cmd = app.add_subcommand("train-toy", "train one toy model");
  add_common(train_toy_cmd, common);
  train_toy_cmd->add_option("--dataset", dataset_path, "dataset checkpoint")->required();
  train_toy_cmd->add_option("--n", n, "hidden width N")->required();
  train_toy_cmd->add_option("--seed", seed, "model seed");
  train_toy_cmd->add_option("--out", out, "output checkpoint path")->required();

  auto* train_sae_cmd = app.add_subcommand("train-sae", "train the SAE of one toy model");
  add_common(train_sae_cmd, common);
  train_sae_cmd->add_option("--dataset", dataset_path, "dataset checkpoint")->required();
  train_sae_cmd->add_option("--toy", toy_path, "toy model checkpoint")->required();
  train_sae_cmd->add_option("--out", out, "output checkpoint path")->required();
  std::string rand_out;
  train_sae_cmd->add_option("--random-out", rand_out, "also write the untrained baseline SAE here");

  std::string toy_a, toy_b, sae_a, sae_b, rand_a, rand_b;
  auto* align_cmd = app.add_subcommand("align", "score one trained pair");
  add_common(align_cmd, common);
  align_cmd->add_option("--dataset", dataset_path, "dataset checkpoint")->required();
  align_cmd->add_option("--toy-a", toy_a)->required();
  align_cmd->add_option("--toy-b", toy_b)->required();
  align_cmd->add_option("--sae-a", sae_a)->required();
  align_cmd->add_option("--sae-b", sae_b)->required();
  align_cmd->add_option("--rand-sae-a", rand_a, "baseline SAE (default: fresh init)");
  align_cmd->add_option("--rand-sae-b", rand_b, "baseline SAE (default: fresh init)");
  align_cmd->add_option("--out", out, "output directory")->required();

  std::uint64_t theory_seed = 7;
  std::size_t prop1_instances = 10;
  auto* theory_cmd = app.add_subcommand("theory-checks", "run the deflation and recovery oracles");
  theory_cmd->add_option("--seed", theory_seed);
  theory_cmd->add_option("--instances", prop1_instances, "random sparse-recovery instances");
  theory_cmd->add_option("--out", out, "output directory");

  auto* run_cmd = app.add_subcommand("run", "full pipeline");
  add_common(run_cmd, common);
  run_cmd->add_option("--out", out, "output directory");

  std::string csv_in;
  auto* report_cmd = app.add_subcommand("report", "rebuild summary tables and charts from alignment.csv");
  report_cmd->add_option("--in", csv_in, "alignment.csv")->required();
  report_cmd->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*gen) {
      const ExperimentConfig cfg = resolve(common, "");
      save_dataset(out, make_dataset(cfg), cfg.data_seed, config_hash(cfg));
      log_line("wrote " + out);
    } else if (*train_toy_cmd) {
      const ExperimentConfig cfg = resolve(common, "");
      const FeatureDataset data = load_dataset(dataset_path);
      if (n < 1 || n >= static_cast<std::size_t>(data.num_features())) {
        throw ConfigError("--n must satisfy 1 <= N < F");
      }
      const ToyTrainResult r = train_toy_for(cfg, data, n, seed);
      save_toy(out, r.model, config_hash(cfg));
      log_line("probe loss " + format_double(r.log.initial_probe_loss) + " -> " +
               format_double(r.log.final_probe_loss) + "; wrote " + out);
    } else if (*train_sae_cmd) {
      const ExperimentConfig cfg = resolve(common, "");
      const FeatureDataset data = load_dataset(dataset_path);
      const ToyModel toy = load_toy(toy_path);
      const DataSplit split = make_split(cfg);
      if (static_cast<std::size_t>(data.num_rows()) != cfg.m) {
        throw ConfigError("dataset has " + std::to_string(data.num_rows()) + " rows but config M is " +
                          std::to_string(cfg.m));
      }
      RowMatF z(static_cast<Eigen::Index>(split.sae_rows.size()), data.z.cols());
      for (std::size_t i = 0; i < split.sae_rows.size(); ++i) {
        z.row(static_cast<Eigen::Index>(i)) = data.z.row(static_cast<Eigen::Index>(split.sae_rows[i]));
      }
      const Mat h = hidden_activations(toy, z);
      const auto width = static_cast<std::size_t>(toy.num_neurons());
      const SaeTrainResult r = train_sae_for(cfg, h, width, toy.seed);
      save_sae(out, r.model, toy.seed, config_hash(cfg));
      if (!rand_out.empty()) save_sae(rand_out, random_sae_for(cfg, h, width, toy.seed), toy.seed, config_hash(cfg));
      log_line("wrote " + out);
    } else if (*align_cmd) {
      ExperimentConfig cfg = resolve(common, out);
      ModelPair models;
      const FeatureDataset data = load_dataset(dataset_path);
      models.toy = {load_toy(toy_a), load_toy(toy_b)};
      models.sae = {load_sae(sae_a), load_sae(sae_b)};
      const DataSplit split = make_split(cfg);
      const auto width = static_cast<std::size_t>(models.toy[0].num_neurons());
      for (int s = 0; s < 2; ++s) {
        const std::string& path = s == 0 ? rand_a : rand_b;
        if (!path.empty()) {
          models.rand_sae[s] = load_sae(path);
          continue;
        }
        RowMatF z(static_cast<Eigen::Index>(split.sae_rows.size()), data.z.cols());
        for (std::size_t i = 0; i < split.sae_rows.size(); ++i) {
          z.row(static_cast<Eigen::Index>(i)) = data.z.row(static_cast<Eigen::Index>(split.sae_rows[i]));
        }
        models.rand_sae[s] = random_sae_for(cfg, hidden_activations(models.toy[s], z), width, models.toy[s].seed);
      }
      const auto reports = align_pair(cfg, data, split, models, width);
      for (const auto& r : reports) {
        std::printf("%-10s %-16s %.4f +- %.4f\n", std::string(to_string(r.metric)).c_str(),
                    comparison_label(r).c_str(), r.mean, r.stderr_);
      }
      emit_report(out, reports);
    } else if (*theory_cmd) {
      const auto checks = run_theory_checks(theory_seed, prop1_instances);
      bool ok = true;
      for (const auto& c : checks) {
        std::printf("%s  %-48s value=%.12g expected=%.12g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.expected);
        ok = ok && c.pass;
      }
      if (!out.empty()) {
        CsvWriter csv(fs::path(out) / "theory_checks.csv", {"check", "value", "expected", "tolerance", "pass"});
        for (const auto& c : checks) {
          csv.cell(c.name).cell(c.value).cell(c.expected).cell(c.tolerance).cell(c.pass ? 1 : 0);
          csv.end_row();
        }
        csv.close();
      }
      return ok ? 0 : static_cast<int>(ExitCode::kDegenerate);
    } else if (*run_cmd) {
      run_experiment(resolve(common, out));
    } else if (*report_cmd) {
      const auto reports = read_alignment_csv(csv_in);
      if (reports.empty()) throw DegenerateInputError("no rows in " + csv_in);
      for (const auto& path : emit_report(out, reports).written) log_line("wrote " + path.string());
    }
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "supalign: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kDegenerate);
  }
  return 0;
}
