#include "supalign/assignment.hpp"

#include <limits>
#include <string>

#include "supalign/error.hpp"

namespace supalign {

Assignment max_weight_assignment(const Mat& weights) {
  const auto n = static_cast<int>(weights.rows());
  const auto m = static_cast<int>(weights.cols());
  if (n > m) {
    throw DimensionError("max_weight_assignment: more rows (" + std::to_string(n) +
                         ") than columns (" + std::to_string(m) + ")");
  }
  if (!weights.allFinite()) throw DegenerateInputError("max_weight_assignment: non-finite weight");

  // Minimize cost = -weight. Arrays are 1-based; index 0 is the virtual root.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> row_of_col(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = row_of_col[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.col_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (row_of_col[j] != 0) out.col_of_row[row_of_col[j] - 1] = j - 1;
  }
  for (int i = 0; i < n; ++i) out.total += weights(i, out.col_of_row[i]);
  return out;
}

}  // namespace supalign
