#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace nclln {

// Finite-state stochastic kernel with its stationary law and optional
// Doeblin constant. Immutable after construction; safe to share across
// threads.
struct TransitionModel {
  std::string label;
  Eigen::MatrixXd kernel;        // row-stochastic, state_count x state_count
  Eigen::VectorXd stationary;    // mu, mu * kernel = mu
  std::optional<double> doeblin_kappa;

  int state_count() const { return static_cast<int>(kernel.rows()); }

  // Checks row sums, stationarity and, when present, the Doeblin sandwich.
  void validate() const;

  std::string to_json() const;
  static TransitionModel from_json(const std::string& text);
};

struct PathSample {
  std::vector<std::uint32_t> states;  // states[t] realizes X_{t+1}
  std::uint64_t seed = 0;
  std::string model_label;

  std::size_t length() const { return states.size(); }
};

// psi(n) for n = 1..N plus the least-squares exponential fit of the decay,
// ln psi(n) ~ ln(prefactor) - rate * n.
struct MixingProfile {
  std::vector<double> psi;  // psi[i] = psi(i+1)
  double fitted_rate = 0.0;
  double fitted_prefactor = 0.0;
};

// Largest kappa with kappa*mu(y) <= kernel(x,y) <= kappa^{-1}*mu(y).
// Throws DoeblinViolated when some entry is zero.
double validate_doeblin(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu);

// Unique invariant law of a primitive kernel. Throws NotPrimitive.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel);

bool is_primitive(const Eigen::MatrixXd& kernel);

// Two-point reduction of the psi-mixing coefficient,
// max_{x,y} |kernel^n(x,y)/mu(y) - 1|.
double psi_coefficient(const TransitionModel& model, int n);

MixingProfile mixing_profile(const TransitionModel& model, int max_n);

// Transfer-matrix construction of a Gibbs Markov chain from a primitive
// adjacency matrix and a pair potential; also returns the topological
// pressure ln(Perron eigenvalue).
struct GibbsResult {
  TransitionModel model;
  double pressure;
};
GibbsResult gibbs_markov(const Eigen::MatrixXi& adjacency,
                         const Eigen::MatrixXd& potential);

// Chain on S^ell whose coordinate i advances i base steps per product step;
// stationary law mu^{tensor ell}. Throws SizeCapExceeded past the cap.
TransitionModel product_chain(const TransitionModel& model, int ell,
                              long long size_cap = 20000);

// Tuple <-> flat index for product states; coordinate 0 most significant.
inline long long product_index(const std::vector<int>& tuple, int base) {
  long long idx = 0;
  for (int x : tuple) idx = idx * base + x;
  return idx;
}
std::vector<int> product_tuple(long long index, int base, int ell);

PathSample sample_path(const TransitionModel& model, std::size_t length,
                       std::uint64_t seed);

// Incremental sampler with O(1) memory per step; the sequence for a given
// (model, seed) is identical to sample_path.
class PathStream {
 public:
  PathStream(const TransitionModel& model, std::uint64_t seed);
  std::uint32_t next();

 private:
  std::uint32_t draw(const double* cdf_row);
  const TransitionModel& model_;
  std::vector<double> cdf_;  // row-major cumulative kernel rows, then mu
  Rng rng_;
  std::int64_t pos_ = -1;
  std::uint32_t state_ = 0;
};

}  // namespace nclln
