#include "supalign/theory.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "supalign/assignment.hpp"
#include "supalign/datagen.hpp"
#include "supalign/error.hpp"
#include "supalign/metrics.hpp"

namespace supalign {

Mat mixing_cross_corr(const Mat& a_a, const Mat& a_b) {
  if (a_a.rows() != a_b.rows()) {
    throw DimensionError("mixing_cross_corr: F differs (" + std::to_string(a_a.rows()) + " vs " +
                         std::to_string(a_b.rows()) + ")");
  }
  return a_a.transpose() * a_b;
}

double perm_score_from_G(const Mat& g) {
  if (g.rows() != g.cols()) throw DimensionError("perm_score_from_G: G must be square");
  if (g.rows() == 0) throw DegenerateInputError("perm_score_from_G: empty G");
  return max_weight_assignment(g).total / static_cast<double>(g.rows());
}

Mat equal_mix_single(std::size_t n, std::size_t f) {
  if (n == 0 || f < n) {
    throw ParameterError("equal_mix: need 1 <= n <= F (n=" + std::to_string(n) +
                         ", F=" + std::to_string(f) + ")");
  }
  const std::size_t units = f / n;
  Mat a = Mat::Zero(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(units));
  for (std::size_t j = 0; j < units; ++j) {
    a(static_cast<Eigen::Index>(j * n), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return a;
}

Mat equal_mix_mixed(std::size_t n, std::size_t f) {
  if (n == 0 || f < n) {
    throw ParameterError("equal_mix: need 1 <= n <= F (n=" + std::to_string(n) +
                         ", F=" + std::to_string(f) + ")");
  }
  const std::size_t units = f / n;
  const double w = 1.0 / std::sqrt(static_cast<double>(n));
  Mat a = Mat::Zero(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(units));
  for (std::size_t j = 0; j < units; ++j) {
    for (std::size_t t = 0; t < n; ++t) {
      a(static_cast<Eigen::Index>(j * n + t), static_cast<Eigen::Index>(j)) = w;
    }
  }
  return a;
}

double deflation_equal_mix(std::size_t n, std::size_t f) {
  return perm_score_from_G(mixing_cross_corr(equal_mix_single(n, f), equal_mix_mixed(n, f)));
}

Mat paired_support(std::size_t f, std::size_t offset) {
  if (f < 4 || f % 2 != 0) {
    throw ParameterError("paired_support: F must be even and >= 4 (got " + std::to_string(f) + ")");
  }
  const double w = 1.0 / std::sqrt(2.0);
  const std::size_t units = f / 2;
  Mat a = Mat::Zero(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(units));
  for (std::size_t j = 0; j < units; ++j) {
    a(static_cast<Eigen::Index>((2 * j + offset) % f), static_cast<Eigen::Index>(j)) = w;
    a(static_cast<Eigen::Index>((2 * j + 1 + offset) % f), static_cast<Eigen::Index>(j)) = w;
  }
  return a;
}

double deflation_shifted_support(std::size_t f, bool shift) {
  return perm_score_from_G(mixing_cross_corr(paired_support(f, 0), paired_support(f, shift ? 1 : 0)));
}

namespace {

std::vector<std::vector<int>> supports_up_to(int f, std::size_t k) {
  std::vector<std::vector<int>> out{{}};
  if (k >= 1) {
    for (int i = 0; i < f; ++i) out.push_back({i});
  }
  if (k >= 2) {
    for (int i = 0; i < f; ++i) {
      for (int j = i + 1; j < f; ++j) out.push_back({i, j});
    }
  }
  return out;
}

}  // namespace

Mat sparse_recover(const Mat& y, const Mat& a, std::size_t k) {
  const Eigen::Index f = a.rows();
  if (y.cols() != a.cols()) {
    throw DimensionError("sparse_recover: Y has " + std::to_string(y.cols()) + " units, A has " +
                         std::to_string(a.cols()));
  }
  if (f > 12 || k > 2 || k == 0) {
    throw ParameterError("sparse_recover: brute force is limited to F <= 12 and 1 <= K <= 2");
  }
  const auto supports = supports_up_to(static_cast<int>(f), k);
  const Mat sensing = a.transpose();  // N x F
  Mat z = Mat::Zero(y.rows(), f);
  std::vector<std::string> failures(static_cast<std::size_t>(y.rows()));

#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const Vec target = y.row(r).transpose();
    const double scale = std::max(target.norm(), 1e-300);
    bool found = false;
    Vec best = Vec::Zero(f);
    for (const auto& s : supports) {
      Vec coef = Vec::Zero(f);
      double residual = target.norm();
      if (!s.empty()) {
        Mat sub(sensing.rows(), static_cast<Eigen::Index>(s.size()));
        for (std::size_t c = 0; c < s.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = sensing.col(s[c]);
        const Vec sol = sub.colPivHouseholderQr().solve(target);
        residual = (sub * sol - target).norm();
        for (std::size_t c = 0; c < s.size(); ++c) coef(s[c]) = sol(static_cast<Eigen::Index>(c));
      }
      const bool fits = target.norm() == 0.0 ? residual == 0.0 : residual < 1e-8 * scale;
      if (!fits) continue;
      if (!found) {
        best = coef;
        found = true;
      } else if ((coef - best).norm() > 1e-6 * std::max(1.0, best.norm())) {
        failures[static_cast<std::size_t>(r)] = "row " + std::to_string(r) +
                                                " has two exact fits with different supports";
        break;
      }
    }
    if (!found && failures[static_cast<std::size_t>(r)].empty()) {
      failures[static_cast<std::size_t>(r)] = "row " + std::to_string(r) + " has no exact fit";
    }
    z.row(r) = best.transpose();
  }
  for (const auto& msg : failures) {
    if (!msg.empty()) throw RecoveryFailureError("sparse_recover: " + msg);
  }
  return z;
}

double prop1_check(const Mat& z, const Mat& a_a, const Mat& a_b, std::size_t k) {
  if (z.cols() != a_a.rows() || z.cols() != a_b.rows()) {
    throw DimensionError("prop1_check: Z width does not match the mixing matrices");
  }
  const Mat za = sparse_recover(z * a_a, a_a, k);
  const Mat zb = sparse_recover(z * a_b, a_b, k);
  std::vector<std::size_t> keep;
  for (Eigen::Index j = 0; j < za.cols(); ++j) {
    if (za.col(j).cwiseAbs().maxCoeff() > 0.0 && zb.col(j).cwiseAbs().maxCoeff() > 0.0) {
      keep.push_back(static_cast<std::size_t>(j));
    }
  }
  if (keep.empty()) throw DegenerateInputError("prop1_check: every recovered column is zero");
  return perm_score(select_cols(za, keep), select_cols(zb, keep));
}

SparseMixingInstance make_sparse_mixing_instance(std::size_t m, std::size_t f, std::size_t n,
                                                 std::size_t k, RngStream rng) {
  SparseMixingInstance inst;
  RngStream z_rng = rng.derive("z");
  inst.z = gen_sparse_rows(m, f, k, z_rng);
  for (Mat* a : {&inst.a_a, &inst.a_b}) {
    RngStream a_rng = rng.derive(a == &inst.a_a ? "a" : "b");
    *a = Mat(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < a->cols(); ++j) {
      for (Eigen::Index i = 0; i < a->rows(); ++i) (*a)(i, j) = a_rng.normal();
      a->col(j).normalize();
    }
  }
  return inst;
}

std::vector<OracleCheck> run_theory_checks(std::uint64_t seed, std::size_t prop1_instances) {
  std::vector<OracleCheck> out;
  const auto check = [&](std::string name, double value, double expected, double tol) {
    out.push_back({std::move(name), value, expected, tol, std::abs(value - expected) <= tol});
  };
  for (const std::size_t n : {1, 2, 3, 4, 9}) {
    check("deflation_equal_mix n=" + std::to_string(n), deflation_equal_mix(n),
          1.0 / std::sqrt(static_cast<double>(n)), 1e-12);
  }
  for (const std::size_t f : {4, 8, 16}) {
    check("deflation_shifted_support F=" + std::to_string(f), deflation_shifted_support(f), 0.5, 1e-12);
  }
  check("deflation_shifted_support F=8 unshifted", deflation_shifted_support(8, false), 1.0, 1e-12);

  const RngStream root(seed);
  {
    // Whitened latents: Ya^T Yb / M reproduces G.
    const Mat z = gen_whitened_sparse(2000, 10, 2, root.derive("whitened"));
    const SparseMixingInstance inst = make_sparse_mixing_instance(10, 10, 8, 2, root.derive("mix"));
    const Mat g = mixing_cross_corr(inst.a_a, inst.a_b);
    const Mat emp = (z * inst.a_a).transpose() * (z * inst.a_b) / static_cast<double>(z.rows());
    check("whitened Ya^T Yb / M vs G (max abs diff)", (emp - g).cwiseAbs().maxCoeff(), 0.0, 1e-6);
  }
  for (std::size_t i = 0; i < prop1_instances; ++i) {
    const SparseMixingInstance inst = make_sparse_mixing_instance(200, 10, 8, 2, root.derive("prop1").derive(i));
    const double recovered = prop1_check(inst.z, inst.a_a, inst.a_b, 2);
    const double raw = perm_score(inst.z * inst.a_a, inst.z * inst.a_b);
    check("prop1 instance " + std::to_string(i) + " recovered", recovered, 1.0, 1e-6);
    out.push_back({"prop1 instance " + std::to_string(i) + " raw below recovered", raw, recovered, 0.0,
                   raw < recovered});
  }
  return out;
}

}  // namespace supalign
