#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

namespace supalign {

/// G = Aa^T Ab for F x N mixing matrices.
Mat mixing_cross_corr(const Mat& a_a, const Mat& a_b);

/// (1/N) max over permutations of tr(G P), solved exactly.
double perm_score_from_G(const Mat& g);

/// Aa picks one feature per unit, Ab mixes n disjoint features per unit with
/// weights 1/sqrt(n). Uses N = F / n units. The score is 1/sqrt(n).
double deflation_equal_mix(std::size_t n, std::size_t f = 36);

/// Pair supports {(0,1),(2,3),...} against the shifted {(1,2),(3,4),...,(F-1,0)},
/// both with weights 1/sqrt(2). Every matched pair overlaps in one feature, so
/// the score is 1/2. With shift = false both sides use the same pairs.
double deflation_shifted_support(std::size_t f, bool shift = true);

/// Mixing matrices for the deflation constructions, exposed for tests.
Mat equal_mix_single(std::size_t n, std::size_t f);
Mat equal_mix_mixed(std::size_t n, std::size_t f);
Mat paired_support(std::size_t f, std::size_t offset);

/// Exact recovery of K-sparse z from y = A^T z for every row of Y = Z A, by
/// enumerating all supports of size <= K (F <= 12, K <= 2). A support fits
/// when its least-squares residual is below 1e-8 relative to |y|; all fitting
/// supports must agree, and the smallest one is returned. Throws
/// RecoveryFailureError when no support fits or two fits disagree.
Mat sparse_recover(const Mat& y, const Mat& a, std::size_t k);

/// Recovers Za and Zb from Z Aa and Z Ab, removes columns that are all zero
/// in either, and returns perm_score of the recovered latents.
double prop1_check(const Mat& z, const Mat& a_a, const Mat& a_b, std::size_t k);

/// K-sparse Z (M x F) with Gaussian mixings Aa, Ab (F x N, unit-norm columns).
struct SparseMixingInstance {
  Mat z, a_a, a_b;
};
SparseMixingInstance make_sparse_mixing_instance(std::size_t m, std::size_t f, std::size_t n,
                                                 std::size_t k, RngStream rng);

struct OracleCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Deflation closed forms, the whitened G identity, and `prop1_instances`
/// end-to-end sparse-recovery checks.
std::vector<OracleCheck> run_theory_checks(std::uint64_t seed, std::size_t prop1_instances = 10);

}  // namespace supalign
