#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "supalign/numerics.hpp"
#include "supalign/transport.hpp"

namespace supalign {

enum class SourceTag { kNeurons, kSaeLatents, kRandSaeLatents };

std::string_view to_string(SourceTag tag);
SourceTag parse_source_tag(std::string_view s);

/// Sample-by-unit activations with the fold plan they are scored under.
struct ActivationMatrix {
  Mat data;  // M x S
  SourceTag tag = SourceTag::kNeurons;
  FoldPlan folds;
  std::size_t pruned = 0;                 // columns removed by prune_dead_latents
  std::vector<std::size_t> kept_columns;  // original indices of the remaining columns
};

ActivationMatrix make_activation_matrix(Mat data, SourceTag tag, FoldPlan folds);

/// Removes every column that is identically zero within at least one fold.
ActivationMatrix prune_dead_latents(ActivationMatrix act);

enum class Metric { kSemiMatch, kSoftMatch, kRidge };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view s);

struct AlignmentReport {
  std::string experiment_id;
  Metric metric = Metric::kSoftMatch;
  SourceTag source = SourceTag::kNeurons;
  SourceTag target = SourceTag::kNeurons;
  std::vector<double> per_fold_scores;
  std::vector<std::optional<int>> alpha_exponent;  // ridge only: selected log10(alpha) per fold
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(k)
  std::size_t pruned_src = 0;
  std::size_t pruned_tgt = 0;
};

/// Fills mean and standard error from per_fold_scores.
void summarize(AlignmentReport& report);

/// Row-wise argmax of a train correlation matrix (lowest column wins ties).
std::vector<int> semi_match_assign(const Mat& c_train);

/// Assign on train rows, score mean assigned-pair correlation on test rows.
AlignmentReport semi_match_score(const ActivationMatrix& ya, const ActivationMatrix& yb);

/// Exact optimal plan for maximizing <P, C> over the transportation polytope.
TransportPlan soft_match_plan(const Mat& c);

/// Fit the plan on train-row correlations, score sum P_ij corr_test(i, j).
/// Total plan mass is 1, so a perfect match scores 1.
AlignmentReport soft_match_score(const ActivationMatrix& ya, const ActivationMatrix& yb);

/// (1/N) max over permutations of the summed paired correlations.
double perm_score(const Mat& ya, const Mat& yb);

/// Per fold: alpha = 10^e chosen on an 80/20 split of the train rows, refit
/// on all train rows, scored as the mean per-target Pearson correlation on
/// the test rows.
AlignmentReport ridge_score(const ActivationMatrix& x, const ActivationMatrix& y,
                            const std::vector<int>& alpha_exponents);

/// Exponents -8..8 inclusive.
std::vector<int> default_alpha_exponents();

/// Mean over target columns of corr(pred_j, truth_j).
double mean_columnwise_corr(const Mat& pred, const Mat& truth);

}  // namespace supalign
