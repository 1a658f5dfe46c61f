#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nclln {

// Tabulated observable F : S^ell -> R^d. Rows of `table` are indexed by the
// flat product-state index (coordinate 0 most significant), matching the
// product-chain state encoding.
struct Observable {
  int base_states = 0;
  int ell = 1;
  int dim = 1;
  Eigen::MatrixXd table;   // s^ell rows, d columns
  double bound_D = 0.0;    // max over table rows of the Euclidean norm
  Eigen::VectorXd mean;    // value of F-bar under mu^{tensor ell}
  bool centered = false;

  long long table_rows() const { return table.rows(); }

  Eigen::VectorXd value(long long product_state) const {
    return table.row(product_state).transpose();
  }
  double scalar_value(long long product_state) const {
    return table(product_state, 0);
  }

  // Recomputes bound_D; mean/centered are only meaningful after
  // with_mean/center_observable ran against a stationary law.
  void finalize();
};

Observable make_observable(int base_states, int ell, int dim,
                           const std::vector<double>& flat_table);

// Convenience: ell = 1, d = 1 observable from per-state values.
Observable observable_from_values(const std::vector<double>& values);

// F(x_1..x_ell) = prod_i g(x_i) for per-state values g.
Observable observable_product(const std::vector<double>& values, int ell);

// F-bar under mu^{tensor ell}; fills mean and the centered flag.
Observable with_mean(Observable f, const Eigen::VectorXd& mu);

// Returns F - F-bar with centered = true and mean = 0.
Observable center_observable(const Observable& f, const Eigen::VectorXd& mu);

}  // namespace nclln
