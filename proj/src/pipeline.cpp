#include "supalign/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <numeric>
#include <span>

#include "supalign/checkpoint.hpp"
#include "supalign/error.hpp"
#include "supalign/report.hpp"

namespace supalign {

namespace {

const char* const kSide[2] = {"a", "b"};

void round_to_float(SaeModel& sae) {
  supalign::round_to_float(sae.w_enc);
  supalign::round_to_float(sae.b_enc);
  supalign::round_to_float(sae.w_dec);
  supalign::round_to_float(sae.b_dec);
}

// Independent per-seed work; failures are rethrown after both finish.
void for_each_side(const std::function<void(int)>& fn) {
  std::exception_ptr err[2];
#pragma omp parallel for num_threads(2) schedule(static, 1)
  for (int s = 0; s < 2; ++s) {
    try {
      fn(s);
    } catch (...) {
      err[s] = std::current_exception();
    }
  }
  for (const auto& e : err) {
    if (e) std::rethrow_exception(e);
  }
}

Mat holdout_features(const FeatureDataset& data, const std::vector<std::size_t>& rows) {
  Mat z(static_cast<Eigen::Index>(rows.size()), data.z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    z.row(static_cast<Eigen::Index>(i)) = data.z.row(static_cast<Eigen::Index>(rows[i])).cast<double>();
  }
  return z;
}

RowMatF gather(const RowMatF& z, const std::vector<std::size_t>& rows) {
  RowMatF out(static_cast<Eigen::Index>(rows.size()), z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::uint64_t side_seed(const ExperimentConfig& cfg, int side) {
  return side == 0 ? cfg.seed_a : cfg.seed_b;
}

}  // namespace

void log_line(const std::string& msg) {
  static const auto start = std::chrono::steady_clock::now();
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "[%8.1fs] ", t);
  std::clog << stamp << msg << std::endl;
}

void run_stage(const std::string& stage, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what(), e.exit_code());
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), ExitCode::kDegenerate);
  }
}

std::string experiment_id_for(const ExperimentConfig& cfg, std::size_t n) {
  return cfg.experiment_id + "_N" + std::to_string(n);
}

FeatureDataset make_dataset(const ExperimentConfig& cfg) {
  const RngStream root(cfg.data_seed);
  FeatureDataset data = gen_features(cfg.m, cfg.f, cfg.p, root.derive("features"));
  data.importance = gen_importance(cfg.f);
  round_to_float(data.importance);
  return data;
}

DataSplit make_split(const ExperimentConfig& cfg) {
  const RngStream root(cfg.data_seed);
  std::vector<std::size_t> order(cfg.m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream split_rng = root.derive("split");
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto holdout = static_cast<std::size_t>(static_cast<double>(cfg.m) * cfg.holdout);
  DataSplit split;
  split.holdout_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout));
  split.sae_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(holdout), order.end());
  std::sort(split.holdout_rows.begin(), split.holdout_rows.end());
  std::sort(split.sae_rows.begin(), split.sae_rows.end());
  split.folds = kfold_split(split.holdout_rows.size(), cfg.folds, root.derive("folds"));
  return split;
}

ToyTrainResult train_toy_for(const ExperimentConfig& cfg, const FeatureDataset& data, std::size_t n,
                             std::uint64_t seed) {
  const RngStream rng = RngStream(seed).derive("toy").derive(n);
  ToyModel model = init_toy(cfg.f, n, rng.derive("init"), cfg.toy.output_activation);
  model.seed = seed;
  ToyTrainConfig tc;
  tc.batch_size = cfg.toy.batch_size;
  tc.epochs = cfg.toy.epochs;
  tc.adam.lr = cfg.toy.lr;
  return train_toy(std::move(model), data, tc, rng.derive("train"));
}

SaeHyper sae_hyper(const ExperimentConfig& cfg) {
  SaeHyper hp;
  hp.lr = cfg.sae.lr;
  hp.batch_size = cfg.sae.batch_size;
  hp.dead_steps = cfg.sae.dead_steps;
  hp.alpha_aux = cfg.sae.alpha_aux;
  hp.k_aux = cfg.sae.k_aux;
  hp.epochs = cfg.sae.epochs;
  return hp;
}

SaeTrainResult train_sae_for(const ExperimentConfig& cfg, const Mat& hidden_train, std::size_t n,
                             std::uint64_t seed) {
  const RngStream rng = RngStream(seed).derive("sae").derive(n);
  const Vec mean = hidden_train.colwise().mean();
  SaeModel sae = init_sae(n, cfg.latents(), cfg.sae.k, mean, rng.derive("init"));
  return train_sae(std::move(sae), hidden_train, sae_hyper(cfg), rng.derive("train"));
}

SaeModel random_sae_for(const ExperimentConfig& cfg, const Mat& hidden_train, std::size_t n,
                        std::uint64_t seed) {
  const RngStream rng = RngStream(seed).derive("rand_sae").derive(n);
  const Vec mean = hidden_train.colwise().mean();
  SaeModel sae = init_sae(n, cfg.latents(), cfg.sae.k, mean, rng.derive("init"));
  round_to_float(sae);
  return sae;
}

DisentanglementTable validate_disentanglement(const Mat& z_holdout, const Mat& neurons,
                                              const Mat& latents) {
  if (z_holdout.rows() != neurons.rows() || z_holdout.rows() != latents.rows()) {
    throw DimensionError("validate_disentanglement: row counts differ");
  }
  DisentanglementTable t;
  t.neuron_max = cross_corr_matrix(z_holdout, neurons).rowwise().maxCoeff();
  t.sae_max = cross_corr_matrix(z_holdout, latents).rowwise().maxCoeff();
  t.neuron_mean = t.neuron_max.mean();
  t.sae_mean = t.sae_max.mean();
  return t;
}

DisentanglementTable validate_disentanglement(const FeatureDataset& dataset, const ToyModel& model,
                                              const SaeModel& sae,
                                              const std::vector<std::size_t>& holdout_rows) {
  const RowMatF z = gather(dataset.z, holdout_rows);
  const Mat h = hidden_activations(model, z);
  return validate_disentanglement(z.cast<double>(), h, alignment_latents(sae, h));
}

std::vector<AlignmentReport> align_pair(const ExperimentConfig& cfg, const FeatureDataset& data,
                                        const DataSplit& split, const ModelPair& models, std::size_t n) {
  const RowMatF z = gather(data.z, split.holdout_rows);
  std::array<ActivationMatrix, 2> neurons, sae, rand;
  for (int s = 0; s < 2; ++s) {
    const Mat h = hidden_activations(models.toy[s], z);
    sae[s] = prune_dead_latents(
        make_activation_matrix(alignment_latents(models.sae[s], h), SourceTag::kSaeLatents, split.folds));
    rand[s] = prune_dead_latents(make_activation_matrix(alignment_latents(models.rand_sae[s], h),
                                                        SourceTag::kRandSaeLatents, split.folds));
    neurons[s] = prune_dead_latents(make_activation_matrix(h, SourceTag::kNeurons, split.folds));
  }
  std::vector<AlignmentReport> out;
  const std::string id = experiment_id_for(cfg, n);
  const auto add = [&](AlignmentReport r) {
    r.experiment_id = id;
    out.push_back(std::move(r));
  };
  for (const Metric m : cfg.metrics) {
    switch (m) {
      case Metric::kSemiMatch:
        add(semi_match_score(neurons[0], neurons[1]));
        add(semi_match_score(sae[0], sae[1]));
        add(semi_match_score(rand[0], sae[1]));
        break;
      case Metric::kSoftMatch:
        add(soft_match_score(neurons[0], neurons[1]));
        add(soft_match_score(sae[0], sae[1]));
        add(soft_match_score(rand[0], sae[1]));
        break;
      case Metric::kRidge:
        add(ridge_score(neurons[0], neurons[1], cfg.alpha_exponents));
        add(ridge_score(sae[0], neurons[1], cfg.alpha_exponents));
        add(ridge_score(rand[0], neurons[1], cfg.alpha_exponents));
        add(ridge_score(sae[0], sae[1], cfg.alpha_exponents));
        break;
    }
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  RunResult result;
  result.dir = cfg.out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  const std::uint64_t hash = config_hash(cfg);
  write_text(cfg.out_dir / "config.json", config_to_json(cfg) + "\n");

  FeatureDataset data;
  DataSplit split;
  run_stage("datagen", [&] {
    log_line("generating dataset M=" + std::to_string(cfg.m) + " F=" + std::to_string(cfg.f));
    data = make_dataset(cfg);
    split = make_split(cfg);
    save_dataset(cfg.out_dir / "dataset.spal", data, cfg.data_seed, hash);
  });
  const Mat z_holdout = holdout_features(data, split.holdout_rows);
  const RowMatF z_holdout_f = gather(data.z, split.holdout_rows);

  for (const std::size_t n : cfg.n_list) {
    const std::string tag = "N=" + std::to_string(n);
    const auto dir = cfg.out_dir / ("N" + std::to_string(n));
    NResult nr;
    nr.n = n;
    nr.toy.n = n;
    nr.validation.n = n;
    ModelPair models;

    run_stage("train-toy " + tag, [&] {
      log_line("training toy pair " + tag);
      const auto start = std::chrono::steady_clock::now();
      for_each_side([&](int s) {
        ToyTrainResult r = train_toy_for(cfg, data, n, side_seed(cfg, s));
        nr.toy.probe_loss_initial[s] = r.log.initial_probe_loss;
        nr.toy.probe_loss_final[s] = r.log.final_probe_loss;
        models.toy[s] = std::move(r.model);
      });
      nr.toy.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (int s = 0; s < 2; ++s) {
        save_toy(dir / ("toy_" + std::string(kSide[s]) + ".spal"), models.toy[s], hash);
      }
    });

    run_stage("toy-analysis " + tag, [&] {
      for (int s = 0; s < 2; ++s) {
        const Vec norms = feature_norms(models.toy[s]);
        nr.toy.represented[s] = static_cast<std::size_t>((norms.array() >= 0.9).count());
      }
      const SharedFeatureSet shared = shared_features(models.toy[0], models.toy[1], cfg.toy.shared_threshold);
      nr.toy.shared = shared.indices.size();
      if (shared.indices.size() >= 2) {
        nr.toy.arrangement = arrangement_similarity(models.toy[0], models.toy[1], shared);
        nr.toy.frac_arrangement_below_half =
            static_cast<double>((nr.toy.arrangement.array() < 0.5).count()) /
            static_cast<double>(nr.toy.arrangement.size());
      }
      log_line(tag + ": represented " + std::to_string(nr.toy.represented[0]) + "/" +
               std::to_string(nr.toy.represented[1]) + ", shared " + std::to_string(nr.toy.shared));
    });

    run_stage("train-sae " + tag, [&] {
      log_line("training SAEs " + tag);
      const RowMatF z_train = gather(data.z, split.sae_rows);
      for_each_side([&](int s) {
        const Mat h_train = hidden_activations(models.toy[s], z_train);
        SaeTrainResult r = train_sae_for(cfg, h_train, n, side_seed(cfg, s));
        models.sae[s] = std::move(r.model);
        models.rand_sae[s] = random_sae_for(cfg, h_train, n, side_seed(cfg, s));
        CsvWriter log(dir / ("sae_log_" + std::string(kSide[s]) + ".csv"), {"step", "mse", "aux", "dead_count"});
        for (const auto& row : r.log) {
          log.cell(row.step).cell(row.mse).cell(row.aux).cell(row.dead_count);
          log.end_row();
        }
        log.close();
      });
      for (int s = 0; s < 2; ++s) {
        const std::string side(kSide[s]);
        save_sae(dir / ("sae_" + side + ".spal"), models.sae[s], side_seed(cfg, s), hash);
        save_sae(dir / ("rand_sae_" + side + ".spal"), models.rand_sae[s], side_seed(cfg, s), hash);
      }
    });

    run_stage("validate " + tag, [&] {
      for (int s = 0; s < 2; ++s) {
        const Mat h = hidden_activations(models.toy[s], z_holdout_f);
        nr.validation.sae[s] = validate_disentanglement(z_holdout, h, alignment_latents(models.sae[s], h));
        nr.validation.rand[s] =
            validate_disentanglement(z_holdout, h, alignment_latents(models.rand_sae[s], h));
      }
      const auto& v = nr.validation;
      nr.validation.neuron_mean = 0.5 * (v.sae[0].neuron_mean + v.sae[1].neuron_mean);
      nr.validation.sae_mean = 0.5 * (v.sae[0].sae_mean + v.sae[1].sae_mean);
      nr.validation.rand_mean = 0.5 * (v.rand[0].sae_mean + v.rand[1].sae_mean);
      log_line(tag + ": validation neuron " + format_double(nr.validation.neuron_mean).substr(0, 6) +
               " sae " + format_double(nr.validation.sae_mean).substr(0, 6));
    });

    run_stage("align " + tag, [&] {
      log_line("alignment " + tag);
      nr.reports = align_pair(cfg, data, split, models, n);
      for (const auto& r : nr.reports) {
        log_line("  " + std::string(to_string(r.metric)) + " " + comparison_label(r) + " " +
                 format_double(r.mean).substr(0, 6) + " +- " + format_double(r.stderr_).substr(0, 6));
      }
    });
    result.reports.insert(result.reports.end(), nr.reports.begin(), nr.reports.end());
    result.per_n.push_back(std::move(nr));
  }

  run_stage("report", [&] {
    emit_report(cfg.out_dir, result.reports);

    CsvWriter toy(cfg.out_dir / "toy_summary.csv",
                  {"N", "represented_a", "represented_b", "shared", "frac_arrangement_below_0.5",
                   "probe_loss_initial_a", "probe_loss_final_a", "probe_loss_initial_b", "probe_loss_final_b"});
    CsvWriter arr(cfg.out_dir / "arrangement.csv", {"N", "neuron", "max_corr"});
    CsvWriter val(cfg.out_dir / "validation.csv",
                  {"N", "model", "feature", "neuron_max_corr", "sae_max_corr", "rand_sae_max_corr"});
    CsvWriter vsum(cfg.out_dir / "validation_summary.csv",
                   {"N", "neuron_mean", "sae_mean", "rand_sae_mean"});
    std::vector<BarGroup> vgroups;
    for (const auto& nr : result.per_n) {
      toy.cell(nr.n).cell(nr.toy.represented[0]).cell(nr.toy.represented[1]).cell(nr.toy.shared);
      toy.cell(nr.toy.frac_arrangement_below_half);
      for (int s = 0; s < 2; ++s) toy.cell(nr.toy.probe_loss_initial[s]).cell(nr.toy.probe_loss_final[s]);
      toy.end_row();
      for (Eigen::Index i = 0; i < nr.toy.arrangement.size(); ++i) {
        arr.cell(nr.n).cell(static_cast<long long>(i)).cell(nr.toy.arrangement[i]);
        arr.end_row();
      }
      for (int s = 0; s < 2; ++s) {
        const auto& t = nr.validation.sae[s];
        for (Eigen::Index f = 0; f < t.neuron_max.size(); ++f) {
          val.cell(nr.n).cell(kSide[s]).cell(static_cast<long long>(f)).cell(t.neuron_max[f]);
          val.cell(t.sae_max[f]).cell(nr.validation.rand[s].sae_max[f]);
          val.end_row();
        }
      }
      vsum.cell(nr.n).cell(nr.validation.neuron_mean).cell(nr.validation.sae_mean).cell(nr.validation.rand_mean);
      vsum.end_row();
      vgroups.push_back({"N=" + std::to_string(nr.n),
                         {{"Neuron", nr.validation.neuron_mean, 0.0},
                          {"SAE", nr.validation.sae_mean, 0.0},
                          {"RandSAE", nr.validation.rand_mean, 0.0}}});
    }
    toy.close();
    arr.close();
    val.close();
    vsum.close();
    write_text(cfg.out_dir / "validation.svg",
               grouped_bar_svg("feature recovery (mean max correlation)", "correlation", vgroups));
  });
  log_line("run complete: " + cfg.out_dir.string());
  return result;
}

}  // namespace supalign
