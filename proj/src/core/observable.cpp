#include "core/observable.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/transition_model.hpp"

namespace nclln {

void Observable::finalize() {
  bound_D = 0.0;
  for (long long r = 0; r < table.rows(); ++r)
    bound_D = std::max(bound_D, table.row(r).norm());
  if (mean.size() != dim) mean = Eigen::VectorXd::Zero(dim);
}

Observable make_observable(int base_states, int ell, int dim,
                           const std::vector<double>& flat_table) {
  if (base_states < 1 || ell < 1 || dim < 1)
    throw ValidationError("observable dimensions must be positive");
  long long rows = 1;
  for (int i = 0; i < ell; ++i) rows *= base_states;
  if (static_cast<long long>(flat_table.size()) != rows * dim)
    throw ValidationError("observable table size mismatch");
  Observable f;
  f.base_states = base_states;
  f.ell = ell;
  f.dim = dim;
  f.table.resize(rows, dim);
  for (long long r = 0; r < rows; ++r)
    for (int c = 0; c < dim; ++c)
      f.table(r, c) = flat_table[static_cast<std::size_t>(r) * dim + c];
  f.finalize();
  return f;
}

Observable observable_from_values(const std::vector<double>& values) {
  return make_observable(static_cast<int>(values.size()), 1, 1, values);
}

Observable observable_product(const std::vector<double>& values, int ell) {
  int s = static_cast<int>(values.size());
  long long rows = 1;
  for (int i = 0; i < ell; ++i) rows *= s;
  std::vector<double> table(rows);
  for (long long r = 0; r < rows; ++r) {
    auto tuple = product_tuple(r, s, ell);
    double v = 1.0;
    for (int x : tuple) v *= values[x];
    table[r] = v;
  }
  return make_observable(s, ell, 1, table);
}

Observable with_mean(Observable f, const Eigen::VectorXd& mu) {
  if (mu.size() != f.base_states)
    throw ValidationError("stationary vector size does not match observable");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.dim);
  for (long long r = 0; r < f.table.rows(); ++r) {
    auto tuple = product_tuple(r, f.base_states, f.ell);
    double w = 1.0;
    for (int x : tuple) w *= mu(x);
    mean += w * f.table.row(r).transpose();
  }
  f.mean = mean;
  f.centered = mean.lpNorm<Eigen::Infinity>() <= 1e-12;
  return f;
}

Observable center_observable(const Observable& f, const Eigen::VectorXd& mu) {
  Observable out = with_mean(f, mu);
  out.table.rowwise() -= out.mean.transpose();
  out.mean.setZero();
  out.centered = true;
  out.finalize();
  return out;
}

}  // namespace nclln
