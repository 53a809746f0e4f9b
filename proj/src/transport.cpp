#include "supalign/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "supalign/error.hpp"

namespace supalign {

namespace {

using Flow = std::int64_t;

// Spanning-tree basis over bipartite nodes: rows 0..na-1, columns na..na+nb-1.
class Basis {
 public:
  Basis(int na, int nb)
      : na_(na), nb_(nb), basic_(static_cast<std::size_t>(na) * nb, 0),
        flow_(static_cast<std::size_t>(na) * nb, 0) {}

  bool basic(int i, int j) const { return basic_[idx(i, j)] != 0; }
  Flow flow(int i, int j) const { return flow_[idx(i, j)]; }
  void set(int i, int j, Flow x) {
    basic_[idx(i, j)] = 1;
    flow_[idx(i, j)] = x;
  }
  void add(int i, int j, Flow dx) { flow_[idx(i, j)] += dx; }
  void drop(int i, int j) {
    basic_[idx(i, j)] = 0;
    flow_[idx(i, j)] = 0;
  }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(na_ + nb_));
    for (int i = 0; i < na_; ++i) {
      for (int j = 0; j < nb_; ++j) {
        if (!basic(i, j)) continue;
        adj[i].push_back(na_ + j);
        adj[na_ + j].push_back(i);
      }
    }
    return adj;
  }

  int count() const { return static_cast<int>(std::count(basic_.begin(), basic_.end(), 1)); }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * nb_ + j; }
  int na_, nb_;
  std::vector<char> basic_;
  std::vector<Flow> flow_;
};

// Parents of a BFS over the basis tree rooted at `root`.
std::vector<int> tree_parents(const std::vector<std::vector<int>>& adj, int root) {
  std::vector<int> parent(adj.size(), -2);
  parent[root] = -1;
  std::queue<int> q;
  q.push(root);
  while (!q.empty()) {
    const int a = q.front();
    q.pop();
    for (const int b : adj[a]) {
      if (parent[b] != -2) continue;
      parent[b] = a;
      q.push(b);
    }
  }
  return parent;
}

// Flows on the basis tree for the given marginals, by peeling leaves.
std::vector<Flow> tree_flows(const Basis& basis, int na, int nb, const std::vector<Flow>& supply,
                             const std::vector<Flow>& demand) {
  const auto adj = basis.adjacency();
  const int nodes = na + nb;
  std::vector<Flow> rest(static_cast<std::size_t>(nodes));
  for (int i = 0; i < na; ++i) rest[i] = supply[i];
  for (int j = 0; j < nb; ++j) rest[na + j] = demand[j];
  std::vector<int> degree(static_cast<std::size_t>(nodes));
  for (int a = 0; a < nodes; ++a) degree[a] = static_cast<int>(adj[a].size());
  std::vector<char> done(static_cast<std::size_t>(nodes), 0);
  std::vector<Flow> flow(static_cast<std::size_t>(na) * nb, 0);
  std::queue<int> leaves;
  for (int a = 0; a < nodes; ++a) {
    if (degree[a] == 1) leaves.push(a);
  }
  while (!leaves.empty()) {
    const int a = leaves.front();
    leaves.pop();
    if (done[a] || degree[a] != 1) continue;
    done[a] = 1;
    int b = -1;
    for (const int c : adj[a]) {
      if (!done[c]) b = c;
    }
    if (b < 0) continue;
    const int i = a < na ? a : b;
    const int j = (a < na ? b : a) - na;
    flow[static_cast<std::size_t>(i) * nb + j] = rest[a];
    rest[b] -= rest[a];
    rest[a] = 0;
    if (--degree[b] == 1) leaves.push(b);
    --degree[a];
  }
  return flow;
}

}  // namespace

TransportPlan solve_transport(const Mat& c) {
  const auto na = static_cast<int>(c.rows());
  const auto nb = static_cast<int>(c.cols());
  if (na == 0 || nb == 0) throw DegenerateInputError("solve_transport: empty cost matrix");
  if (!c.allFinite()) throw DegenerateInputError("solve_transport: non-finite correlation");

  // Scaled marginals: supplies nb, demands na. Perturb supplies by +1 and the
  // last demand by +na, after scaling both by K = na + 1.
  const Flow k_scale = na + 1;
  std::vector<Flow> supply(static_cast<std::size_t>(na), static_cast<Flow>(nb) * k_scale + 1);
  std::vector<Flow> demand(static_cast<std::size_t>(nb), static_cast<Flow>(na) * k_scale);
  demand.back() += na;

  Basis basis(na, nb);
  {
    std::vector<Flow> s = supply, d = demand;
    int i = 0, j = 0;
    while (true) {
      const Flow amount = std::min(s[i], d[j]);
      basis.set(i, j, amount);
      s[i] -= amount;
      d[j] -= amount;
      if (i == na - 1 && j == nb - 1) break;
      if (s[i] == 0 && i < na - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  if (basis.count() != na + nb - 1) {
    throw SolverError("solve_transport: degenerate initial basis (" +
                      std::to_string(basis.count()) + " basic cells)");
  }

  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * scale;
  const std::size_t max_iter = 50 * static_cast<std::size_t>(na) * nb + 1000;
  std::vector<double> u(static_cast<std::size_t>(na)), v(static_cast<std::size_t>(nb));
  std::size_t iter = 0;
  double last_gain = 0.0;
  for (;; ++iter) {
    if (iter >= max_iter) {
      throw SolverError("solve_transport: no convergence after " + std::to_string(iter) +
                        " pivots (last reduced cost " + std::to_string(last_gain) + ", size " +
                        std::to_string(na) + "x" + std::to_string(nb) + ")");
    }
    const auto adj = basis.adjacency();
    // Potentials: u_i + v_j = c_ij on basic cells.
    {
      std::queue<int> q;
      q.push(0);
      std::vector<char> seen(adj.size(), 0);
      seen[0] = 1;
      u[0] = 0.0;
      while (!q.empty()) {
        const int a = q.front();
        q.pop();
        for (const int b : adj[a]) {
          if (seen[b]) continue;
          seen[b] = 1;
          if (a < na) {
            v[b - na] = c(a, b - na) - u[a];
          } else {
            u[b] = c(b, a - na) - v[a - na];
          }
          q.push(b);
        }
      }
    }

    int enter_i = -1, enter_j = -1;
    double best = tol;
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        if (basis.basic(i, j)) continue;
        const double d = c(i, j) - u[i] - v[j];
        if (d > best) {
          best = d;
          enter_i = i;
          enter_j = j;
        }
      }
    }
    if (enter_i < 0) break;
    last_gain = best;

    // Cycle: entering cell plus the tree path from column enter_j to row enter_i.
    const auto parent = tree_parents(adj, enter_i);
    std::vector<std::pair<int, int>> minus_cells, plus_cells;
    int node = na + enter_j;
    bool minus = true;
    while (node != enter_i) {
      const int up = parent[node];
      const int i = node < na ? node : up;
      const int j = (node < na ? up : node) - na;
      (minus ? minus_cells : plus_cells).emplace_back(i, j);
      minus = !minus;
      node = up;
    }
    Flow theta = -1;
    std::pair<int, int> leave{-1, -1};
    for (const auto& [i, j] : minus_cells) {
      if (theta < 0 || basis.flow(i, j) < theta) {
        theta = basis.flow(i, j);
        leave = {i, j};
      }
    }
    if (theta <= 0) {
      throw SolverError("solve_transport: degenerate pivot at iteration " + std::to_string(iter));
    }
    for (const auto& [i, j] : minus_cells) basis.add(i, j, -theta);
    for (const auto& [i, j] : plus_cells) basis.add(i, j, theta);
    basis.drop(leave.first, leave.second);
    basis.set(enter_i, enter_j, theta);
  }

  const std::vector<Flow> flows =
      tree_flows(basis, na, nb, std::vector<Flow>(static_cast<std::size_t>(na), nb),
                 std::vector<Flow>(static_cast<std::size_t>(nb), na));
  TransportPlan plan;
  plan.iterations = iter;
  plan.p = Mat::Zero(na, nb);
  const double total = static_cast<double>(na) * static_cast<double>(nb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const Flow x = flows[static_cast<std::size_t>(i) * nb + j];
      if (x < 0) {
        throw SolverError("solve_transport: negative flow after unperturbing at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
      }
      plan.p(i, j) = static_cast<double>(x) / total;
    }
  }
  plan.objective = plan.p.cwiseProduct(c).sum();
  return plan;
}

double marginal_error(const Mat& p) {
  const double ra = 1.0 / static_cast<double>(p.rows());
  const double cb = 1.0 / static_cast<double>(p.cols());
  const double row_err = (p.rowwise().sum().array() - ra).abs().maxCoeff();
  const double col_err = (p.colwise().sum().array() - cb).abs().maxCoeff();
  return std::max(row_err, col_err);
}

}  // namespace supalign
