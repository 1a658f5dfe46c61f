#pragma once

#include <string>

#include "json.hpp"

#include "core/level_set.hpp"
#include "core/rate_evaluator.hpp"

namespace nclln {

struct OracleOutcome {
  bool pass = false;
  nlohmann::json summary;
};

// Runs the named independent oracle against the main computation path.
// Subtargets: pi-growth, curve-dp, cycles, contraction.
OracleOutcome run_oracle(const std::string& subtarget,
                         const nlohmann::json& params);

// Exact tilted-expectation growth ratio ln(1^T M^{n+1} w / 1^T M^n w) by
// plain scaled matrix powering; independent of the eigenvalue path.
double pi_growth_ratio(const TransitionModel& product,
                       const Observable& observable,
                       const Eigen::VectorXd& alpha, int n);

// Dense brute-force tube DP at 4x the position resolution of the main
// solver; no convexity shortcuts.
double dense_curve_distance(const RateEvaluator& evaluator,
                            const StepCurve& gamma, double a, double tube_tol);

}  // namespace nclln
