#pragma once

#include <cstdint>
#include <vector>

#include "core/rate_evaluator.hpp"
#include "core/sums.hpp"

namespace nclln {

struct DistParams {
  // 0 resolves to 1e-3 * D. Error budget: positions quantized to
  // tube_tol/4, bisection terminates at width tube_tol/2.
  double tube_tol = 0.0;
  // Extra cap on the lattice-induced slope pitch (fraction of D); keeps the
  // quantized action faithful when the curve grid is large.
  double slope_granularity = 0.02;
  long long cells_cap = 4000000;  // quantized positions per grid step
};

// Distance from a step curve to the level set Phi(a) in the uniform grid
// metric, via bisection on the tube radius with a convex-DP feasibility
// oracle. Scalar curves only.
double dist_to_level_set(const RateEvaluator& evaluator, const StepCurve& gamma,
                         double a, const DistParams& params = {});

// Finite epsilon-net of Phi(a): piecewise-linear curves with `segments`
// lattice slopes, mean rate <= a, pruned at epsilon/2.
struct LevelSetNet {
  double a = 0.0;
  double eps = 0.0;
  int segments = 0;
  int dim = 1;
  double pitch = 0.0;  // slope lattice pitch
  // positions[i] holds curve i's values at knots 1..segments (times dim).
  std::vector<std::vector<double>> positions;

  long long count() const { return static_cast<long long>(positions.size()); }
  StepCurve curve(long long i) const;
};

LevelSetNet level_set_net(const RateEvaluator& evaluator, double a, double eps,
                          int segments, double pitch = 0.0,
                          long long enumeration_cap = 20000000);

struct HausdorffParams {
  DistParams dist;
  int coarse_segments = 16;  // cheap upper-bound projection grid
};

struct HausdorffBreakdown {
  double first_direction = 0.0;   // sup over W of dist to Phi(a)
  double second_direction = 0.0;  // sup over net of min distance to W
  long long dp_solves = 0;        // exact convex solves spent
  long long windows_pruned_by_action = 0;
};

// H(W, Phi(a)) with the finite net standing in for the second direction;
// the reported value carries the net's eps as additive uncertainty.
double hausdorff_distance(const CurveFamily& w, const LevelSetNet& net,
                          const RateEvaluator& evaluator, double a,
                          const HausdorffParams& params = {},
                          HausdorffBreakdown* breakdown = nullptr);

std::string level_set_net_to_csv(const LevelSetNet& net);

}  // namespace nclln
