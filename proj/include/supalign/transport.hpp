#pragma once

#include <cstddef>

#include "supalign/numerics.hpp"

namespace supalign {

/// Nonnegative Na x Nb plan with row sums 1/Na and column sums 1/Nb.
struct TransportPlan {
  Mat p;
  double objective = 0.0;  // sum_ij P_ij C_ij for the C it was solved on
  std::size_t iterations = 0;
};

/// Exact maximizer of <P, C> over the transportation polytope.
///
/// Transportation simplex on the integer-scaled problem (supplies Nb per row,
/// demands Na per column) with Orden's perturbation, so every basis is
/// nondegenerate and each pivot strictly improves the objective. Flows stay
/// integral; the final plan is the optimal basis re-solved on the unperturbed
/// marginals and divided by Na*Nb.
TransportPlan solve_transport(const Mat& c);

/// Largest absolute deviation of `p` from the uniform marginals.
double marginal_error(const Mat& p);

}  // namespace supalign
