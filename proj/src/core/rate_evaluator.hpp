#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "core/observable.hpp"
#include "core/sums.hpp"
#include "core/transition_model.hpp"

namespace nclln {

// Cached spectral evaluator for Pi(alpha) = ln(spectral radius of the tilted
// product-chain operator) plus the Legendre machinery for I and S.
//
// Caches are safe under concurrent readers with serialized writes; every
// computed value is a deterministic function of the inputs.
class RateEvaluator {
 public:
  RateEvaluator(const TransitionModel& base, int ell, Observable obs,
                long long size_cap = 20000);

  const TransitionModel& product_model() const { return product_; }
  const Observable& observable() const { return obs_; }
  int dim() const { return obs_.dim; }
  double bound() const { return obs_.bound_D; }

  // Pi(alpha); exact 0 at alpha = 0.
  double log_mgf_rate(const Eigen::VectorXd& alpha) const;
  double log_mgf_rate(double alpha) const;  // d = 1 convenience

  // Central differences of Pi with step 1e-4.
  Eigen::VectorXd grad_pi(const Eigen::VectorXd& alpha) const;

  // I(beta) = sup_alpha((alpha,beta) - Pi(alpha)); +infinity outside the
  // essential range.
  double rate(const Eigen::VectorXd& beta) const;
  double rate(double beta) const;

  // Certified convex bounds from the d = 1 conjugate sweep:
  // rate_lower <= I <= rate_upper, with a gap shrinking in the sweep density.
  double rate_lower(double beta) const;
  double rate_upper(double beta) const;

  // max{beta : I(beta) <= t} on the upper branch and the symmetric
  // min on the lower branch, via the certified lower bound (conservative
  // outward). t <= 0 returns the mean slope.
  double inverse_rate_pos(double t) const;
  double inverse_rate_neg(double t) const;

  // S(gamma) = (1/N) sum_j I(N * (values[j] - values[j-1])).
  double action(const StepCurve& gamma) const;

  // Limiting variance of (direction, F) along the product chain via the
  // fundamental-matrix solve; equals the Hessian quadratic form of Pi at 0.
  double sigma_squared(const Eigen::VectorXd& direction) const;

  // Mean slope grad Pi(0) = E_pi F.
  Eigen::VectorXd mean_slope() const;

 private:
  struct Sweep {
    std::vector<double> alphas;  // ascending, includes 0
    std::vector<double> pis;
    std::vector<double> slopes;  // chord slopes, size alphas.size()-1
  };

  double power_iteration_pi(const Eigen::VectorXd& alpha) const;
  const Sweep& sweep() const;
  double golden_rate(double beta, double lo, double hi) const;
  double rate_scalar_impl(double beta) const;
  double rate_ascent(const Eigen::VectorXd& beta) const;

  TransitionModel product_;
  Observable obs_;
  Eigen::VectorXd pi_stat_;  // stationary law of the product chain

  mutable std::shared_mutex pi_mutex_;
  mutable std::map<std::vector<double>, double> pi_cache_;
  mutable std::shared_mutex rate_mutex_;
  mutable std::map<double, double> rate_cache_;
  mutable std::once_flag sweep_once_;
  mutable std::unique_ptr<Sweep> sweep_;

  static constexpr double kAlphaBox = 50.0;
  static constexpr double kGrowthSlopeTol = 1e-6;
  static constexpr double kFdStep = 1e-4;
};

}  // namespace nclln
