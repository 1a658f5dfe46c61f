#include "core/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "core/errors.hpp"

namespace nclln {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<int> canonical_rotation(std::vector<int> cycle) {
  auto it = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), it, cycle.end());
  return cycle;
}

double cycle_mean(const WeightedGraph& g, const std::vector<int>& cycle) {
  double total = 0.0;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    int u = cycle[i];
    int v = cycle[(i + 1) % cycle.size()];
    auto it = std::find(g.succ[u].begin(), g.succ[u].end(), v);
    total += g.weight[u][static_cast<std::size_t>(it - g.succ[u].begin())];
  }
  return total / static_cast<double>(cycle.size());
}

// Longest-walk potentials for weights shifted by the cycle mean; the optimal
// cycle consists of tight edges of the fixpoint.
std::vector<int> tight_witness(const WeightedGraph& g, double lambda,
                               bool maximize) {
  int n = g.nodes;
  double sign = maximize ? 1.0 : -1.0;
  // Relaxation: h(v) = max(h(v), h(u) + w'(u,v)) with w' = sign*(w - lambda).
  // No positive w'-cycles exist, so n+1 rounds reach the fixpoint up to
  // rounding in lambda.
  std::vector<double> h(n, 0.0);
  for (int round = 0; round < n + 2; ++round) {
    bool changed = false;
    for (int u = 0; u < n; ++u)
      for (std::size_t e = 0; e < g.succ[u].size(); ++e) {
        int v = g.succ[u][e];
        double wp = sign * (g.weight[u][e] - lambda);
        if (h[u] + wp > h[v] + 1e-15) {
          h[v] = h[u] + wp;
          changed = true;
        }
      }
    if (!changed) break;
  }
  for (double tol = 1e-9; tol <= 1e-3; tol *= 100.0) {
    // Tight subgraph; DFS preferring small node indices finds a cycle.
    std::vector<std::vector<int>> tight(n);
    for (int u = 0; u < n; ++u)
      for (std::size_t e = 0; e < g.succ[u].size(); ++e) {
        int v = g.succ[u][e];
        double wp = sign * (g.weight[u][e] - lambda);
        if (std::abs(h[u] + wp - h[v]) <= tol * (1.0 + std::abs(h[u])))
          tight[u].push_back(v);
      }
    std::vector<int> color(n, 0), stack;
    std::vector<int> found;
    std::function<bool(int)> dfs = [&](int u) -> bool {
      color[u] = 1;
      stack.push_back(u);
      for (int v : tight[u]) {
        if (color[v] == 1) {
          auto it = std::find(stack.begin(), stack.end(), v);
          found.assign(it, stack.end());
          return true;
        }
        if (color[v] == 0 && dfs(v)) return true;
      }
      color[u] = 2;
      stack.pop_back();
      return false;
    };
    for (int s = 0; s < n && found.empty(); ++s)
      if (color[s] == 0) dfs(s);
    if (!found.empty()) {
      auto cyc = canonical_rotation(found);
      if (std::abs(cycle_mean(g, cyc) - lambda) <= 1e-7 * (1.0 + std::abs(lambda)))
        return cyc;
    }
  }
  throw NumericError("no tight witness cycle found for the mean-cycle value");
}

}  // namespace

WeightedGraph WeightedGraph::from_support(const TransitionModel& model,
                                          const Eigen::VectorXd& node_weight) {
  WeightedGraph g;
  g.nodes = model.state_count();
  g.succ.resize(g.nodes);
  g.weight.resize(g.nodes);
  for (int u = 0; u < g.nodes; ++u)
    for (int v = 0; v < g.nodes; ++v)
      if (model.kernel(u, v) > 0.0) {
        g.succ[u].push_back(v);
        g.weight[u].push_back(node_weight(v));
      }
  return g;
}

MeanCycle karp_mean_cycle(const WeightedGraph& g, bool maximize) {
  int n = g.nodes;
  if (n < 1) throw ValidationError("empty graph");
  double sign = maximize ? 1.0 : -1.0;

  // d[k][v] = best walk weight from node 0 with exactly k edges.
  std::vector<std::vector<double>> d(n + 1, std::vector<double>(n, kNegInf));
  d[0][0] = 0.0;
  for (int k = 1; k <= n; ++k)
    for (int u = 0; u < n; ++u) {
      if (d[k - 1][u] == kNegInf) continue;
      for (std::size_t e = 0; e < g.succ[u].size(); ++e) {
        int v = g.succ[u][e];
        double cand = d[k - 1][u] + sign * g.weight[u][e];
        if (cand > d[k][v]) d[k][v] = cand;
      }
    }

  double best = kNegInf;
  for (int v = 0; v < n; ++v) {
    if (d[n][v] == kNegInf) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (d[k][v] == kNegInf) continue;
      worst = std::min(worst, (d[n][v] - d[k][v]) / (n - k));
    }
    best = std::max(best, worst);
  }
  if (best == kNegInf) throw NumericError("Karp found no cycle");
  double lambda = sign * best;

  MeanCycle out;
  out.cycle = tight_witness(g, lambda, maximize);
  out.mean = cycle_mean(g, out.cycle);
  return out;
}

MeanCycle brute_force_mean_cycle(const WeightedGraph& g, bool maximize) {
  int n = g.nodes;
  if (n > 12) throw SizeCapExceeded("cycle enumeration limited to 12 nodes");
  MeanCycle best;
  bool have = false;
  std::vector<int> path;
  std::vector<char> used(n, 0);

  // Enumerate each simple cycle once, anchored at its smallest node.
  std::function<void(int, int)> dfs = [&](int anchor, int u) {
    for (std::size_t e = 0; e < g.succ[u].size(); ++e) {
      int v = g.succ[u][e];
      if (v == anchor) {
        double mean = cycle_mean(g, path);
        if (!have || (maximize ? mean > best.mean : mean < best.mean)) {
          best.mean = mean;
          best.cycle = path;
          have = true;
        }
        continue;
      }
      if (v < anchor || used[v]) continue;
      used[v] = 1;
      path.push_back(v);
      dfs(anchor, v);
      path.pop_back();
      used[v] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    std::fill(used.begin(), used.end(), 0);
    used[s] = 1;
    dfs(s, s);
  }
  if (!have) throw NumericError("graph has no cycle");
  return best;
}

RangeReport beta_range(const RateEvaluator& evaluator) {
  if (evaluator.dim() != 1)
    throw DimensionNotScalar("beta_range requires a scalar observable");
  Eigen::VectorXd w = evaluator.observable().table.col(0);
  WeightedGraph g = WeightedGraph::from_support(evaluator.product_model(), w);
  MeanCycle plus = karp_mean_cycle(g, true);
  MeanCycle minus = karp_mean_cycle(g, false);
  RangeReport out;
  out.beta_plus = plus.mean;
  out.beta_minus = minus.mean;
  out.beta_zero = plus.mean;
  out.witness_plus = plus.cycle;
  out.witness_minus = minus.cycle;
  return out;
}

}  // namespace nclln
