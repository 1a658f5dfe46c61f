#include "core/occupation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "core/cycles.hpp"
#include "core/errors.hpp"

namespace nclln {

namespace {

// Objective in log coordinates phi = ln u; concave and shift-invariant.
double dv_objective(const TransitionModel& model, const Eigen::VectorXd& nu,
                    const Eigen::VectorXd& phi) {
  int s = model.state_count();
  double total = 0.0;
  for (int x = 0; x < s; ++x) {
    if (nu(x) == 0.0) continue;
    // ln (P e^phi)(x) via a max-shift for stability.
    double m = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < s; ++y)
      if (model.kernel(x, y) > 0.0) m = std::max(m, phi(y));
    double acc = 0.0;
    for (int y = 0; y < s; ++y)
      if (model.kernel(x, y) > 0.0)
        acc += model.kernel(x, y) * std::exp(phi(y) - m);
    total += nu(x) * (phi(x) - (m + std::log(acc)));
  }
  return total;
}

Eigen::VectorXd dv_gradient(const TransitionModel& model,
                            const Eigen::VectorXd& nu,
                            const Eigen::VectorXd& phi) {
  int s = model.state_count();
  Eigen::VectorXd grad = nu;
  for (int x = 0; x < s; ++x) {
    if (nu(x) == 0.0) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < s; ++y)
      if (model.kernel(x, y) > 0.0) m = std::max(m, phi(y));
    double denom = 0.0;
    for (int y = 0; y < s; ++y)
      if (model.kernel(x, y) > 0.0)
        denom += model.kernel(x, y) * std::exp(phi(y) - m);
    for (int y = 0; y < s; ++y)
      if (model.kernel(x, y) > 0.0)
        grad(y) -= nu(x) * model.kernel(x, y) * std::exp(phi(y) - m) / denom;
  }
  return grad;
}

double dv_ascent(const TransitionModel& model, const Eigen::VectorXd& nu,
                 Eigen::VectorXd phi) {
  const double cap = 45.0;
  double f = dv_objective(model, nu, phi);
  for (int it = 0; it < 600; ++it) {
    Eigen::VectorXd grad = dv_gradient(model, nu, phi);
    double gn = grad.norm();
    if (gn <= 1e-12) break;
    double t = 1.0;
    Eigen::VectorXd cand;
    double fc;
    while (true) {
      cand = (phi + t * grad).cwiseMax(-cap).cwiseMin(cap);
      fc = dv_objective(model, nu, cand);
      if (fc >= f + 1e-4 * t * gn * gn || t < 1e-13) break;
      t *= 0.5;
    }
    if (fc <= f + 1e-16 * (1.0 + std::abs(f))) break;
    phi = cand;
    f = fc;
  }
  return f;
}

}  // namespace

double donsker_varadhan_J(const TransitionModel& model,
                          const Eigen::VectorXd& nu) {
  int s = model.state_count();
  if (nu.size() != s) throw ValidationError("nu size mismatch");
  if ((nu.array() < -1e-15).any() || std::abs(nu.sum() - 1.0) > 1e-10)
    throw ValidationError("nu must be a probability vector");
  if (!is_primitive(model.kernel))
    throw NotPrimitive("Donsker-Varadhan requires a primitive model");

  if (s == 2) {
    // One free log coordinate after gauge fixing; golden section is exact
    // enough and fully deterministic.
    auto g = [&](double t) {
      Eigen::VectorXd phi(2);
      phi << 0.0, t;
      return dv_objective(model, nu, phi);
    };
    double lo = -45.0, hi = 45.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    while (hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi))) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = g(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = g(x1);
      }
    }
    return std::max(0.0, std::max(f1, f2));
  }

  // Multi-start ascent; ln(nu/mu) is the exact optimizer in the i.i.d. case
  // and a good start in general.
  double best = 0.0;
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(s));
  Eigen::VectorXd guess(s);
  for (int x = 0; x < s; ++x)
    guess(x) = std::log((nu(x) + 1e-12) / model.stationary(x));
  starts.push_back(guess);
  starts.push_back(-guess);
  for (const auto& start : starts)
    best = std::max(best, dv_ascent(model, nu, start));
  return std::max(0.0, best);
}

ContractionResult contraction_check(const TransitionModel& model,
                                    const Eigen::VectorXd& g, double beta,
                                    int resolution) {
  int s = model.state_count();
  if (g.size() != s) throw ValidationError("observable size mismatch");
  if (resolution < 1) throw ValidationError("resolution must be >= 1");

  // Essential range of the running average; beta must lie strictly inside.
  WeightedGraph graph = WeightedGraph::from_support(model, g);
  double beta_plus = karp_mean_cycle(graph, true).mean;
  double beta_minus = karp_mean_cycle(graph, false).mean;
  if (!(beta > beta_minus && beta < beta_plus))
    throw InfeasibleBeta("beta outside the open essential range (" +
                         std::to_string(beta_minus) + ", " +
                         std::to_string(beta_plus) + ")");

  double gmax = g.maxCoeff(), gmin = g.minCoeff();
  double slack = (gmax - gmin) / (2.0 * resolution) + 1e-12;

  ContractionResult out;
  out.moment_slack = slack;
  out.inf_J = std::numeric_limits<double>::infinity();

  // Enumerate compositions of `resolution` into s parts.
  std::vector<int> comp(s, 0);
  std::function<void(int, int)> rec = [&](int idx, int rest) {
    if (idx == s - 1) {
      comp[idx] = rest;
      Eigen::VectorXd nu(s);
      double moment = 0.0;
      for (int x = 0; x < s; ++x) {
        nu(x) = static_cast<double>(comp[x]) / resolution;
        moment += nu(x) * g(x);
      }
      if (std::abs(moment - beta) <= slack) {
        double j = donsker_varadhan_J(model, nu);
        if (j < out.inf_J) {
          out.inf_J = j;
          out.argmin = nu;
        }
      }
      return;
    }
    for (int take = 0; take <= rest; ++take) {
      comp[idx] = take;
      rec(idx + 1, rest - take);
    }
  };
  rec(0, resolution);

  if (std::isinf(out.inf_J))
    throw InfeasibleBeta("no simplex grid point meets the moment constraint");
  return out;
}

}  // namespace nclln
