#pragma once

#include <string>
#include <vector>

#include "core/observable.hpp"
#include "core/transition_model.hpp"

namespace nclln {

// Bundled models and observables used by tests, the oracle subcommands and
// config files that reference fixtures by name.

TransitionModel flip_chain(double p);            // 2 states, stay prob 1-p
TransitionModel iid_chain(const std::vector<double>& mu, const std::string& label);
TransitionModel pair_chain(double p);            // (X_{k-1}, X_k) of the flip chain
TransitionModel golden_gibbs_chain();            // zero-potential golden-mean shift

// A fixture bundles a base model, the arity and an observable table.
struct Fixture {
  std::string name;
  TransitionModel model;
  int ell = 1;
  Observable observable;
};

Fixture fixture(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace nclln
