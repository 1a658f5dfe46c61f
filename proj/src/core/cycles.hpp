#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/rate_evaluator.hpp"

namespace nclln {

// Directed graph with edge weights; node u's successors and the weight
// carried on each edge (here the head-state observable value).
struct WeightedGraph {
  int nodes = 0;
  std::vector<std::vector<int>> succ;
  std::vector<std::vector<double>> weight;  // parallel to succ

  static WeightedGraph from_support(const TransitionModel& model,
                                    const Eigen::VectorXd& node_weight);
};

struct MeanCycle {
  double mean = 0.0;
  std::vector<int> cycle;  // canonical: rotated to the smallest node
};

// Karp's algorithm for the maximum (or minimum) mean cycle; the reported
// mean is recomputed from the witness cycle so it matches cycle-level
// arithmetic exactly.
MeanCycle karp_mean_cycle(const WeightedGraph& g, bool maximize);

// Exhaustive simple-cycle enumeration; intended for graphs with <= 12 nodes.
MeanCycle brute_force_mean_cycle(const WeightedGraph& g, bool maximize);

struct RangeReport {
  double beta_plus = 0.0;
  double beta_minus = 0.0;
  double beta_zero = 0.0;  // = beta_plus for these finite models
  std::vector<int> witness_plus;
  std::vector<int> witness_minus;
};

// Essential range of the scalar observable along the product chain, via
// max/min mean cycles on the support graph. Requires d = 1.
RangeReport beta_range(const RateEvaluator& evaluator);

}  // namespace nclln
