#pragma once

#include <vector>

#include "supalign/numerics.hpp"

namespace supalign {

/// Maximum-weight assignment of each row to a distinct column.
struct Assignment {
  std::vector<int> col_of_row;
  double total = 0.0;
};

/// Hungarian algorithm (shortest augmenting paths with potentials), O(n^2 m).
/// Requires rows <= cols; every row receives a distinct column.
Assignment max_weight_assignment(const Mat& weights);

}  // namespace supalign
