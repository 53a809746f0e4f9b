#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "supalign/checkpoint.hpp"
#include "supalign/config.hpp"
#include "supalign/error.hpp"
#include "supalign/pipeline.hpp"
#include "supalign/report.hpp"

namespace fs = std::filesystem;
using namespace supalign;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("supalign_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.m = 6000;
  cfg.f = 12;
  cfg.p = 0.15;
  cfg.n_list = {4};
  cfg.toy.batch_size = 256;
  cfg.toy.epochs = 2;
  cfg.sae.k = 3;
  cfg.sae.batch_size = 256;
  cfg.sae.epochs = 2;
  cfg.alpha_exponents = {-4, -2, 0, 2};
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("toy and SAE checkpoints round-trip exactly") {
  const fs::path dir = scratch("models");
  ToyModel toy = init_toy(10, 3, RngStream(1), OutputActivation::kNone);
  toy.b_dec.setConstant(0.25);
  toy.seed = 42;
  round_to_float(toy.w);
  save_toy(dir / "toy.spal", toy, 99);
  CheckpointMeta meta;
  const ToyModel back = load_toy(dir / "toy.spal", &meta);
  CHECK(back.w == toy.w);
  CHECK(back.b_dec == toy.b_dec);
  CHECK(back.seed == 42);
  CHECK(back.output == OutputActivation::kNone);
  CHECK(meta.config_hash == 99);
  CHECK(peek_checkpoint(dir / "toy.spal").kind == CheckpointKind::kToyModel);

  SaeModel sae = init_sae(3, 7, 2, Vec::Constant(3, 0.5), RngStream(2));
  round_to_float(sae.w_enc);
  round_to_float(sae.w_dec);
  save_sae(dir / "sae.spal", sae, 5);
  const SaeModel sback = load_sae(dir / "sae.spal");
  CHECK(sback.w_enc == sae.w_enc);
  CHECK(sback.w_dec == sae.w_dec);
  CHECK(sback.b_dec == sae.b_dec);
  CHECK(sback.k == 2);
  CHECK_THROWS_AS(load_toy(dir / "sae.spal"), FormatError);
}

TEST_CASE("dataset checkpoint round-trips at M = 10,000") {
  const fs::path dir = scratch("dataset");
  FeatureDataset data = gen_features(10000, 64, 0.1, RngStream(3));
  data.importance = gen_importance(64);
  round_to_float(data.importance);
  save_dataset(dir / "d.spal", data, 7);
  CheckpointMeta meta;
  const FeatureDataset back = load_dataset(dir / "d.spal", &meta);
  CHECK(back.z == data.z);
  CHECK(back.importance == data.importance);
  CHECK(back.p == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(meta.seed == 7);
}

TEST_CASE("corrupted checkpoints raise FormatError") {
  const fs::path dir = scratch("corrupt");
  save_toy(dir / "good.spal", init_toy(6, 2, RngStream(4)));
  const std::string bytes = slurp(dir / "good.spal");

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  spit(dir / "magic.spal", bad_magic);
  CHECK_THROWS_AS(load_toy(dir / "magic.spal"), FormatError);

  spit(dir / "short.spal", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_toy(dir / "short.spal"), FormatError);

  spit(dir / "long.spal", bytes + "x");
  CHECK_THROWS_AS(load_toy(dir / "long.spal"), FormatError);

  spit(dir / "header.spal", bytes.substr(0, 10));
  CHECK_THROWS_AS(peek_checkpoint(dir / "header.spal"), FormatError);
  CHECK_THROWS_AS(load_toy(dir / "missing.spal"), Error);
}

TEST_CASE("config JSON is strict and round-trips") {
  ExperimentConfig cfg;
  cfg.n_list = {4, 6};
  cfg.sae.k = 5;
  cfg.metrics = {Metric::kRidge};
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  ExperimentConfig moved = cfg;
  moved.out_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(cfg));
  moved.seed_a = 11;
  CHECK(config_hash(moved) != config_hash(cfg));

  CHECK_THROWS_AS(config_from_json(R"({"M": 100, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"sae": {"kk": 3}})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"M": "many"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
  CHECK(config_from_json(R"({"M": 1000, "N_list": [4]})").m == 1000);
}

TEST_CASE("config validation") {
  const auto rejects = [](auto mutate) {
    ExperimentConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  };
  rejects([](ExperimentConfig& c) { c.p = 0.0; });
  rejects([](ExperimentConfig& c) { c.p = 1.5; });
  rejects([](ExperimentConfig& c) { c.n_list = {64}; });
  rejects([](ExperimentConfig& c) { c.n_list = {}; });
  rejects([](ExperimentConfig& c) { c.folds = 1; });
  rejects([](ExperimentConfig& c) { c.holdout = 1.0; });
  rejects([](ExperimentConfig& c) { c.sae.k = 0; });
  rejects([](ExperimentConfig& c) { c.sae.f_lat = 4; });
  rejects([](ExperimentConfig& c) { c.metrics = {}; });
  ExperimentConfig paper;
  apply_paper_scale(paper);
  CHECK(paper.m == 10240000);
  CHECK(paper.toy.epochs == 1);
  CHECK(paper.sae.epochs == 1);
  CHECK(parse_metric_list("soft,ridge") == std::vector<Metric>{Metric::kSoftMatch, Metric::kRidge});
  CHECK_THROWS_AS(parse_metric_list("soft,cka"), ConfigError);
}

TEST_CASE("alignment CSV round-trips and reports render") {
  const fs::path dir = scratch("report");
  AlignmentReport a;
  a.experiment_id = "toy_N8";
  a.metric = Metric::kRidge;
  a.source = SourceTag::kSaeLatents;
  a.target = SourceTag::kNeurons;
  a.per_fold_scores = {0.1 / 3.0, 0.7, 0.9};
  a.alpha_exponent = {-2, 0, 3};
  a.pruned_src = 4;
  summarize(a);
  AlignmentReport b = a;
  b.metric = Metric::kSoftMatch;
  b.source = b.target = SourceTag::kNeurons;
  b.alpha_exponent = {std::nullopt, std::nullopt, std::nullopt};
  b.pruned_src = 0;

  write_alignment_csv(dir / "alignment.csv", {a, b});
  const auto back = read_alignment_csv(dir / "alignment.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].per_fold_scores == a.per_fold_scores);
  CHECK(back[0].alpha_exponent == a.alpha_exponent);
  CHECK(back[0].pruned_src == 4);
  CHECK(back[0].mean == a.mean);
  CHECK(back[1].metric == Metric::kSoftMatch);
  CHECK(comparison_label(back[0]) == "SAE->Neuron");

  const auto groups = groups_from_reports({a});
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].bars.size() == 1);
  CHECK(groups[0].bars[0].value == a.mean);

  const EmittedFiles files = emit_report(dir, {a, b});
  CHECK(fs::exists(dir / "ridge.svg"));
  CHECK(fs::exists(dir / "soft_match.svg"));
  CHECK(!fs::exists(dir / "semi_match.svg"));
  REQUIRE(files.notices.size() == 1);
  CHECK(files.notices[0].find("semi_match") != std::string::npos);
  const std::string svg = slurp(dir / "ridge.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("a tiny run is deterministic and its checkpoints reproduce the scores") {
  const fs::path d1 = scratch("run1"), d2 = scratch("run2");
  const RunResult r1 = run_experiment(tiny_config(d1));
  const RunResult r2 = run_experiment(tiny_config(d2));
  CHECK(slurp(d1 / "alignment.csv") == slurp(d2 / "alignment.csv"));
  CHECK(slurp(d1 / "N4" / "sae_a.spal") == slurp(d2 / "N4" / "sae_a.spal"));
  for (const char* f : {"config.json", "dataset.spal", "toy_summary.csv", "validation_summary.csv",
                        "alignment_summary.csv", "soft_match.svg", "validation.svg", "N4/toy_b.spal",
                        "N4/rand_sae_a.spal", "N4/sae_log_b.csv"}) {
    CHECK(fs::exists(d1 / f));
  }
  CHECK(r1.reports.size() == 3 + 3 + 4);

  // Scores recomputed from the written checkpoints match the in-memory run.
  const ExperimentConfig cfg = tiny_config(d1);
  ModelPair models;
  for (int s = 0; s < 2; ++s) {
    const std::string side = s == 0 ? "a" : "b";
    models.toy[s] = load_toy(d1 / "N4" / ("toy_" + side + ".spal"));
    models.sae[s] = load_sae(d1 / "N4" / ("sae_" + side + ".spal"));
    models.rand_sae[s] = load_sae(d1 / "N4" / ("rand_sae_" + side + ".spal"));
  }
  const auto again = align_pair(cfg, load_dataset(d1 / "dataset.spal"), make_split(cfg), models, 4);
  REQUIRE(again.size() == r1.reports.size());
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].per_fold_scores == r1.reports[i].per_fold_scores);

  ExperimentConfig other = tiny_config(scratch("run3"));
  other.seed_b = 3;
  const RunResult r3 = run_experiment(other);
  CHECK(r3.reports[0].per_fold_scores != r1.reports[0].per_fold_scores);
}

TEST_CASE("stage failures carry the stage name and exit code") {
  try {
    run_stage("train-toy N=8", [] { throw TrainingDivergenceError("loss is NaN", 12); });
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "train-toy N=8");
    CHECK(e.exit_code() == ExitCode::kDivergence);
    CHECK(std::string(e.what()).find("loss is NaN") != std::string::npos);
  }
}

TEST_CASE("disentanglement table examples") {
  Mat z(4, 2);
  z << 1, 0, 0, 1, 1, 1, 0, 0;
  const DisentanglementTable t = validate_disentanglement(z, z, Mat(z.col(0)));
  CHECK(t.neuron_max[0] == doctest::Approx(1.0));
  CHECK(t.neuron_mean == doctest::Approx(1.0));
  CHECK(t.sae_max[1] == doctest::Approx(0.0));
  CHECK(t.sae_mean == doctest::Approx(0.5));
}
