#include "supalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "supalign/assignment.hpp"
#include "supalign/error.hpp"
#include "supalign/ridge.hpp"

namespace supalign {

std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::kNeurons: return "neurons";
    case SourceTag::kSaeLatents: return "sae_latents";
    case SourceTag::kRandSaeLatents: return "rand_sae_latents";
  }
  return "unknown";
}

SourceTag parse_source_tag(std::string_view s) {
  if (s == "neurons") return SourceTag::kNeurons;
  if (s == "sae_latents") return SourceTag::kSaeLatents;
  if (s == "rand_sae_latents") return SourceTag::kRandSaeLatents;
  throw FormatError("unknown source tag: " + std::string(s));
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kSemiMatch: return "semi_match";
    case Metric::kSoftMatch: return "soft_match";
    case Metric::kRidge: return "ridge";
  }
  return "unknown";
}

Metric parse_metric(std::string_view s) {
  if (s == "semi_match" || s == "semi") return Metric::kSemiMatch;
  if (s == "soft_match" || s == "soft") return Metric::kSoftMatch;
  if (s == "ridge") return Metric::kRidge;
  throw ConfigError("unknown metric: " + std::string(s));
}

ActivationMatrix make_activation_matrix(Mat data, SourceTag tag, FoldPlan folds) {
  if (static_cast<std::size_t>(data.rows()) != folds.num_rows) {
    throw DimensionError("activation matrix has " + std::to_string(data.rows()) +
                         " rows but fold plan covers " + std::to_string(folds.num_rows));
  }
  ActivationMatrix act;
  act.kept_columns.resize(static_cast<std::size_t>(data.cols()));
  std::iota(act.kept_columns.begin(), act.kept_columns.end(), std::size_t{0});
  act.data = std::move(data);
  act.tag = tag;
  act.folds = std::move(folds);
  return act;
}

ActivationMatrix prune_dead_latents(ActivationMatrix act) {
  if (static_cast<std::size_t>(act.data.rows()) != act.folds.num_rows || act.folds.k == 0) {
    throw DimensionError("prune_dead_latents: fold plan does not match the activation rows");
  }
  const auto cols = static_cast<std::size_t>(act.data.cols());
  if (act.kept_columns.size() != cols) {
    act.kept_columns.resize(cols);
    std::iota(act.kept_columns.begin(), act.kept_columns.end(), std::size_t{0});
  }
  // fires[f][j]: column j has a nonzero entry in fold f.
  std::vector<std::vector<char>> fires(act.folds.k, std::vector<char>(cols, 0));
  for (Eigen::Index r = 0; r < act.data.rows(); ++r) {
    auto& f = fires[static_cast<std::size_t>(act.folds.assignments[static_cast<std::size_t>(r)])];
    for (std::size_t j = 0; j < cols; ++j) {
      if (act.data(r, static_cast<Eigen::Index>(j)) != 0.0) f[j] = 1;
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < cols; ++j) {
    bool alive = true;
    for (const auto& f : fires) alive = alive && f[j] != 0;
    if (alive) keep.push_back(j);
  }
  if (keep.empty()) {
    throw DegenerateInputError("prune_dead_latents: every column is dead in some fold (" +
                               std::string(to_string(act.tag)) + ")");
  }
  ActivationMatrix out;
  out.data = select_cols(act.data, keep);
  out.tag = act.tag;
  out.folds = std::move(act.folds);
  out.pruned = act.pruned + (cols - keep.size());
  for (const auto j : keep) out.kept_columns.push_back(act.kept_columns[j]);
  return out;
}

void summarize(AlignmentReport& report) {
  const auto& s = report.per_fold_scores;
  if (s.empty()) throw DegenerateInputError("summarize: no fold scores");
  const double k = static_cast<double>(s.size());
  report.mean = std::accumulate(s.begin(), s.end(), 0.0) / k;
  if (s.size() < 2) {
    report.stderr_ = 0.0;
    return;
  }
  double ss = 0.0;
  for (const double v : s) ss += (v - report.mean) * (v - report.mean);
  report.stderr_ = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
}

std::vector<int> semi_match_assign(const Mat& c_train) {
  std::vector<int> out(static_cast<std::size_t>(c_train.rows()), 0);
  for (Eigen::Index i = 0; i < c_train.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < c_train.cols(); ++j) {
      if (c_train(i, j) > c_train(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

namespace {

struct FoldData {
  Mat a_train, b_train, a_test, b_test;
};

void check_pair(const ActivationMatrix& ya, const ActivationMatrix& yb) {
  if (ya.data.rows() != yb.data.rows()) {
    throw DimensionError("alignment: inputs have different row counts");
  }
  if (ya.folds.assignments != yb.folds.assignments || ya.folds.k != yb.folds.k) {
    throw DimensionError("alignment: inputs do not share a fold plan");
  }
  if (static_cast<std::size_t>(ya.data.rows()) != ya.folds.num_rows) {
    throw DimensionError("alignment: fold plan does not match row count");
  }
  if (ya.data.cols() == 0 || yb.data.cols() == 0) {
    throw DegenerateInputError("alignment: input without columns");
  }
}

FoldData split_fold(const ActivationMatrix& ya, const ActivationMatrix& yb, std::size_t fold) {
  const auto train = ya.folds.train_rows(fold);
  const auto test = ya.folds.test_rows(fold);
  if (test.size() < 2 || train.size() < 2) {
    throw DegenerateInputError("alignment: fold " + std::to_string(fold) +
                               " has fewer than 2 train or test rows");
  }
  return {select_rows(ya.data, train), select_rows(yb.data, train), select_rows(ya.data, test),
          select_rows(yb.data, test)};
}

AlignmentReport new_report(Metric metric, const ActivationMatrix& ya, const ActivationMatrix& yb) {
  AlignmentReport r;
  r.metric = metric;
  r.source = ya.tag;
  r.target = yb.tag;
  r.pruned_src = ya.pruned;
  r.pruned_tgt = yb.pruned;
  return r;
}

}  // namespace

AlignmentReport semi_match_score(const ActivationMatrix& ya, const ActivationMatrix& yb) {
  check_pair(ya, yb);
  AlignmentReport report = new_report(Metric::kSemiMatch, ya, yb);
  for (std::size_t fold = 0; fold < ya.folds.k; ++fold) {
    const FoldData d = split_fold(ya, yb, fold);
    const auto assign = semi_match_assign(cross_corr_matrix(d.a_train, d.b_train));
    double total = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      total += pearson_corr(d.a_test.col(static_cast<Eigen::Index>(i)), d.b_test.col(assign[i]));
    }
    report.per_fold_scores.push_back(total / static_cast<double>(assign.size()));
    report.alpha_exponent.emplace_back();
  }
  summarize(report);
  return report;
}

TransportPlan soft_match_plan(const Mat& c) { return solve_transport(c); }

AlignmentReport soft_match_score(const ActivationMatrix& ya, const ActivationMatrix& yb) {
  check_pair(ya, yb);
  AlignmentReport report = new_report(Metric::kSoftMatch, ya, yb);
  for (std::size_t fold = 0; fold < ya.folds.k; ++fold) {
    const FoldData d = split_fold(ya, yb, fold);
    const TransportPlan plan = soft_match_plan(cross_corr_matrix(d.a_train, d.b_train));
    const Mat c_test = cross_corr_matrix(d.a_test, d.b_test);
    report.per_fold_scores.push_back(plan.p.cwiseProduct(c_test).sum());
    report.alpha_exponent.emplace_back();
  }
  summarize(report);
  return report;
}

double perm_score(const Mat& ya, const Mat& yb) {
  if (ya.cols() != yb.cols()) {
    throw DimensionError("perm_score: unit counts differ (" + std::to_string(ya.cols()) + " vs " +
                         std::to_string(yb.cols()) + ")");
  }
  if (ya.cols() == 0) throw DegenerateInputError("perm_score: no units");
  const Assignment a = max_weight_assignment(cross_corr_matrix(ya, yb));
  return a.total / static_cast<double>(ya.cols());
}

double mean_columnwise_corr(const Mat& pred, const Mat& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DimensionError("mean_columnwise_corr: shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) total += pearson_corr(pred.col(j), truth.col(j));
  return total / static_cast<double>(truth.cols());
}

std::vector<int> default_alpha_exponents() {
  std::vector<int> e(17);
  std::iota(e.begin(), e.end(), -8);
  return e;
}

AlignmentReport ridge_score(const ActivationMatrix& x, const ActivationMatrix& y,
                            const std::vector<int>& alpha_exponents) {
  if (alpha_exponents.empty()) throw ParameterError("ridge_score: empty alpha grid");
  check_pair(x, y);
  AlignmentReport report = new_report(Metric::kRidge, x, y);
  for (std::size_t fold = 0; fold < x.folds.k; ++fold) {
    const FoldData d = split_fold(x, y, fold);
    // Inner split: every fifth train row validates.
    std::vector<std::size_t> inner, valid;
    for (std::size_t r = 0; r < static_cast<std::size_t>(d.a_train.rows()); ++r) {
      (r % 5 == 4 ? valid : inner).push_back(r);
    }
    if (valid.size() < 2 || inner.size() < 2) {
      throw DegenerateInputError("ridge_score: train fold too small for the inner split");
    }
    const Mat x_val = select_rows(d.a_train, valid);
    const Mat y_val = select_rows(d.b_train, valid);
    const RidgePath inner_path(select_rows(d.a_train, inner), select_rows(d.b_train, inner));
    int best_e = alpha_exponents.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (const int e : alpha_exponents) {
      const double score =
          mean_columnwise_corr(ridge_predict(inner_path.fit(std::pow(10.0, e)), x_val), y_val);
      if (score > best_score) {
        best_score = score;
        best_e = e;
      }
    }
    const RidgeFit fit = ridge_fit(d.a_train, d.b_train, std::pow(10.0, best_e));
    report.per_fold_scores.push_back(mean_columnwise_corr(ridge_predict(fit, d.a_test), d.b_test));
    report.alpha_exponent.emplace_back(best_e);
  }
  summarize(report);
  return report;
}

}  // namespace supalign
