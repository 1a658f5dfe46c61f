#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/observable.hpp"
#include "core/transition_model.hpp"

namespace nclln {

// Index maps q_i on {1..n}; the default q_i(m) = i*m realizes the
// arithmetic-progression sums.
struct IndexMap {
  enum class Kind { linear, power, table };
  Kind kind = Kind::linear;
  long long factor = 1;              // linear: q(m) = factor*m
  int exponent = 1;                  // power: q(m) = m^exponent
  std::vector<long long> values;     // table: q(m) = values[m-1]

  long long operator()(long long m) const;
};

struct IndexMaps {
  std::vector<IndexMap> maps;  // one per coordinate
  int linear_prefix = 0;       // leading maps with q_i(m) = i*m

  static IndexMaps linear(int ell);
  int ell() const { return static_cast<int>(maps.size()); }
  bool all_linear() const { return linear_prefix == ell(); }
  long long max_index(long long n) const;
  void validate(long long n) const;  // strict monotonicity on {1..n}
};

// Grid-sampled curve [0,1] -> R^d anchored at 0; values[j] realizes the
// curve at u = j/N.
struct StepCurve {
  int grid = 0;
  int dim = 1;
  std::vector<double> values;  // (grid+1) * dim, row-major by grid point

  double at(int j, int c = 0) const {
    return values[static_cast<std::size_t>(j) * dim + c];
  }
  double& at(int j, int c = 0) {
    return values[static_cast<std::size_t>(j) * dim + c];
  }
  static StepCurve zero(int grid, int dim = 1);
  static StepCurve line(int grid, double slope);  // d = 1, values j*slope/N
};

// Uniform grid distance max_j |a(j) - b(j)| (Euclidean norm per point).
double curve_distance(const StepCurve& a, const StepCurve& b);

// Prefix sums Sigma_0..Sigma_n in R^d, flat (n+1) x d.
struct PrefixSums {
  long long n = 0;
  int dim = 1;
  std::vector<double> data;

  double at(long long k, int c = 0) const {
    return data[static_cast<std::size_t>(k) * dim + c];
  }
};

PrefixSums prefix_sums_nonconventional(const PathSample& path,
                                       const Observable& f, long long n,
                                       const IndexMaps& q);

PrefixSums independent_copies_prefix_sums(const std::vector<PathSample>& paths,
                                          const Observable& f, long long n,
                                          const IndexMaps& q);

// Paths for the independent-copy sum: Markov copies for the linear
// coordinates, i.i.d. draws from mu for the nonlinear ones.
std::vector<PathSample> make_copy_paths(const TransitionModel& model,
                                        const IndexMaps& q, long long n,
                                        const std::vector<std::uint64_t>& seeds);

// b_c(n) = [c ln n]; throws WindowTooShort when the floor is < 1.
int window_length(long long n, double c);

// Sliding-window curve set W^c_n backed by one shared prefix-sum array;
// member curves materialize on demand.
struct CurveFamily {
  std::shared_ptr<const PrefixSums> prefix;
  long long n = 0;
  double c = 0.0;
  int b = 0;

  long long count() const { return n - b + 1; }
  StepCurve curve(long long m) const;
  // Curve value at grid point j without materializing.
  double value(long long m, int j, int comp = 0) const {
    return (prefix->at(m + j, comp) - prefix->at(m, comp)) / b;
  }
  int dim() const { return prefix->dim; }
};

StepCurve window_curve(const PrefixSums& prefix, long long m, long long n,
                       double c);
CurveFamily window_family(std::shared_ptr<const PrefixSums> prefix,
                          long long n, double c);

// CSV with one row per (curve, grid point); leading comment line carries
// n, c, b, d.
std::string curve_family_to_csv(const CurveFamily& family);

// Streaming scalar window maximum: max over offsets of the mean of b
// consecutive summands, computed in O(b) memory from regenerated paths.
struct WindowMaxResult {
  double max_avg = 0.0;
  long long arg_offset = 0;
  int b = 0;
};
WindowMaxResult scalar_window_max_streaming(const TransitionModel& model,
                                            const Observable& f,
                                            const IndexMaps& q, long long n,
                                            int b, std::uint64_t seed);

}  // namespace nclln
