#pragma once

#include <Eigen/Dense>

#include "core/transition_model.hpp"

namespace nclln {

// Donsker-Varadhan level-2 rate of an occupation law nu against a primitive
// chain: J(nu) = sup_{u>0} -sum_x nu(x) ln((Pu)(x)/u(x)). Always >= 0.
double donsker_varadhan_J(const TransitionModel& model,
                          const Eigen::VectorXd& nu);

struct ContractionResult {
  double inf_J = 0.0;
  Eigen::VectorXd argmin;       // minimizing occupation law on the grid
  double moment_slack = 0.0;    // half pitch of the moment grid
};

// Contraction of J to the scalar level: min over a simplex grid of
// occupation laws with |sum G dnu - beta| <= slack of J(nu). `resolution`
// is the simplex denominator (grid points i/resolution).
ContractionResult contraction_check(const TransitionModel& model,
                                    const Eigen::VectorXd& g, double beta,
                                    int resolution);

}  // namespace nclln
