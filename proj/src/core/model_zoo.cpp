#include "core/model_zoo.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace nclln {

TransitionModel flip_chain(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("flip probability must lie in (0,1)");
  TransitionModel m;
  m.label = "flip-" + std::to_string(p);
  m.kernel.resize(2, 2);
  m.kernel << 1.0 - p, p, p, 1.0 - p;
  m.stationary.resize(2);
  m.stationary << 0.5, 0.5;
  m.doeblin_kappa = validate_doeblin(m.kernel, m.stationary);
  return m;
}

TransitionModel iid_chain(const std::vector<double>& mu, const std::string& label) {
  int s = static_cast<int>(mu.size());
  TransitionModel m;
  m.label = label;
  m.kernel.resize(s, s);
  m.stationary.resize(s);
  for (int i = 0; i < s; ++i) {
    m.stationary(i) = mu[static_cast<std::size_t>(i)];
    for (int j = 0; j < s; ++j) m.kernel(i, j) = mu[static_cast<std::size_t>(j)];
  }
  m.validate();
  m.doeblin_kappa = 1.0;
  return m;
}

TransitionModel pair_chain(double p) {
  TransitionModel base = flip_chain(p);
  TransitionModel m;
  m.label = "pair-" + std::to_string(p);
  m.kernel = Eigen::MatrixXd::Zero(4, 4);
  // State (a,b) indexed 2a+b steps to (b,c) with probability P(b,c).
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        m.kernel(2 * a + b, 2 * b + c) = base.kernel(b, c);
  m.stationary.resize(4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      m.stationary(2 * a + b) = base.stationary(a) * base.kernel(a, b);
  m.validate();
  return m;
}

TransitionModel golden_gibbs_chain() {
  Eigen::MatrixXi adj(2, 2);
  adj << 1, 1, 1, 0;
  GibbsResult g = gibbs_markov(adj, Eigen::MatrixXd::Zero(2, 2));
  g.model.label = "golden-gibbs";
  return g.model;
}

namespace {

TransitionModel drift3_chain() {
  TransitionModel m;
  m.label = "drift3";
  m.kernel.resize(3, 3);
  m.kernel << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5;
  m.stationary = stationary_distribution(m.kernel);
  m.doeblin_kappa = validate_doeblin(m.kernel, m.stationary);
  return m;
}

TransitionModel quad4_chain() {
  TransitionModel m;
  m.label = "quad4";
  m.kernel.resize(4, 4);
  m.kernel << 0.40, 0.30, 0.20, 0.10,
              0.15, 0.45, 0.25, 0.15,
              0.25, 0.10, 0.40, 0.25,
              0.10, 0.20, 0.30, 0.40;
  m.stationary = stationary_distribution(m.kernel);
  m.doeblin_kappa = validate_doeblin(m.kernel, m.stationary);
  return m;
}

}  // namespace

Fixture fixture(const std::string& name) {
  Fixture f;
  f.name = name;
  if (name == "iid-fair-pm1") {
    f.model = iid_chain({0.5, 0.5}, name);
    f.ell = 1;
    f.observable = observable_from_values({1.0, -1.0});
  } else if (name == "iid-fair-coin") {
    f.model = iid_chain({0.5, 0.5}, name);
    f.ell = 1;
    f.observable = observable_from_values({0.0, 1.0});
  } else if (name == "flip01-pm1") {
    f.model = flip_chain(0.1);
    f.ell = 1;
    f.observable = observable_from_values({1.0, -1.0});
  } else if (name == "flip02-prod2") {
    f.model = flip_chain(0.2);
    f.ell = 2;
    f.observable = observable_product({1.0, -1.0}, 2);
  } else if (name == "drift3-l2") {
    f.model = drift3_chain();
    f.ell = 2;
    f.observable = center_observable(observable_product({1.0, 0.0, -1.0}, 2),
                                     f.model.stationary);
  } else if (name == "quad4-l3") {
    f.model = quad4_chain();
    f.ell = 3;
    std::vector<double> g{1.0, 0.25, -0.5, -1.0};
    std::vector<double> table(64);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          table[static_cast<std::size_t>(16 * a + 4 * b + c)] =
              0.5 * g[a] + 0.5 * g[b] * g[c];
    f.observable = center_observable(make_observable(4, 3, 1, table),
                                     f.model.stationary);
  } else if (name == "vec2-l1") {
    f.model = flip_chain(0.3);
    f.ell = 1;
    f.observable = make_observable(2, 1, 2, {1.0, -0.5, -1.0, 0.5});
  } else if (name == "golden-gibbs-pm1") {
    f.model = golden_gibbs_chain();
    f.ell = 1;
    f.observable = center_observable(observable_from_values({1.0, -1.0}),
                                     f.model.stationary);
  } else if (name == "pair-coboundary-01") {
    f.model = pair_chain(0.1);
    f.ell = 1;
    // F((a,b)) = h(b) - h(a) telescopes along the chain.
    f.observable = observable_from_values({0.0, -2.0, 2.0, 0.0});
  } else {
    throw ValidationError("unknown fixture: " + name);
  }
  return f;
}

std::vector<std::string> fixture_names() {
  return {"iid-fair-pm1",  "iid-fair-coin", "flip01-pm1",
          "flip02-prod2",  "drift3-l2",     "quad4-l3",
          "vec2-l1",       "golden-gibbs-pm1", "pair-coboundary-01"};
}

}  // namespace nclln
