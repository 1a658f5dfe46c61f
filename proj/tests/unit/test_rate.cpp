#include <cmath>

#include "doctest.h"

#include "core/cycles.hpp"
#include "core/errors.hpp"
#include "core/model_zoo.hpp"
#include "core/oracles.hpp"
#include "core/rate_evaluator.hpp"
#include "core/rng.hpp"

using namespace nclln;

namespace {

double fair_pm1_rate(double beta) {
  // Conjugate of ln cosh: ((1+b)/2) ln(1+b) + ((1-b)/2) ln(1-b).
  if (std::abs(beta) > 1.0) return std::numeric_limits<double>::infinity();
  double out = 0.0;
  if (beta > -1.0) out += 0.5 * (1.0 + beta) * std::log1p(beta);
  if (beta < 1.0) out += 0.5 * (1.0 - beta) * std::log1p(-beta);
  return out;
}

RateEvaluator fair_evaluator() {
  Fixture f = fixture("iid-fair-pm1");
  return RateEvaluator(f.model, f.ell, f.observable);
}

}  // namespace

TEST_CASE("log mgf rate: zero tilt and the iid closed form") {
  RateEvaluator ev = fair_evaluator();
  CHECK(ev.log_mgf_rate(0.0) == 0.0);
  CHECK(ev.log_mgf_rate(1.0) ==
        doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-12));
  CHECK(ev.log_mgf_rate(1.0) == doctest::Approx(0.4337808304830272));
  for (double a : {-2.5, -1.0, -0.3, 0.2, 0.9, 3.0}) {
    double pi = ev.log_mgf_rate(a);
    CHECK(pi == doctest::Approx(std::log(std::cosh(a))).epsilon(1e-11));
    CHECK(pi <= ev.bound() * std::abs(a) + 1e-12);
    CHECK(pi >= -1e-12);  // centered
  }
}

TEST_CASE("log mgf rate: midpoint convexity on random tilts") {
  for (const char* name : {"flip02-prod2", "drift3-l2", "golden-gibbs-pm1"}) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    Rng rng(99);
    for (int t = 0; t < 20; ++t) {
      double x = 6.0 * rng.uniform01() - 3.0;
      double y = 6.0 * rng.uniform01() - 3.0;
      double lhs = ev.log_mgf_rate(0.5 * (x + y));
      double rhs = 0.5 * (ev.log_mgf_rate(x) + ev.log_mgf_rate(y));
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("rate function: iid fair +-1 closed form on the acceptance grid") {
  RateEvaluator ev = fair_evaluator();
  for (double beta : {-0.9, -0.5, 0.0, 0.3, 0.5, 0.9})
    CHECK(ev.rate(beta) == doctest::Approx(fair_pm1_rate(beta)).epsilon(1e-7));
  CHECK(ev.rate(0.5) == doctest::Approx(0.13081203594113698).epsilon(1e-9));
  CHECK(std::isinf(ev.rate(2.0)));
  CHECK(std::isinf(ev.rate(-1.5)));
  CHECK(ev.rate(0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rate function: certified bounds bracket the value") {
  RateEvaluator ev = fair_evaluator();
  for (double beta : {-0.8, -0.2, 0.1, 0.45, 0.77}) {
    double lo = ev.rate_lower(beta);
    double hi = ev.rate_upper(beta);
    double mid = ev.rate(beta);
    CHECK(lo <= mid + 1e-12);
    CHECK(mid <= hi + 1e-12);
    CHECK(hi - lo <= 1e-4);
  }
}

TEST_CASE("inverse rate: reach is consistent with the rate") {
  RateEvaluator ev = fair_evaluator();
  for (double t : {0.01, 0.05, 0.13, 0.4}) {
    double bp = ev.inverse_rate_pos(t);
    double bm = ev.inverse_rate_neg(t);
    CHECK(ev.rate_lower(bp) <= t + 1e-9);
    CHECK(ev.rate(std::min(1.0, bp + 0.02)) >= t - 1e-9);
    CHECK(bm == doctest::Approx(-bp).epsilon(1e-6));  // symmetric model
  }
}

TEST_CASE("rate function: Bernoulli coin for the classical law") {
  Fixture f = fixture("iid-fair-coin");
  RateEvaluator ev(f.model, f.ell, f.observable);
  // I(3/4) = (3/4) ln(3/2) + (1/4) ln(1/2).
  double expect = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  CHECK(ev.rate(0.75) == doctest::Approx(expect).epsilon(1e-8));
  CHECK(ev.rate(0.5) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gradient of Pi vanishes at zero for centered observables") {
  for (const char* name : {"iid-fair-pm1", "flip02-prod2", "drift3-l2"}) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    Eigen::VectorXd g = ev.grad_pi(Eigen::VectorXd::Zero(ev.dim()));
    CHECK(g.norm() <= 1e-6);
  }
}

TEST_CASE("rate positivity and ray monotonicity inside the range") {
  for (const char* name : {"iid-fair-pm1", "flip02-prod2", "golden-gibbs-pm1"}) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    RangeReport range = beta_range(ev);
    for (double frac : {0.15, 0.4, 0.7}) {
      double beta = frac * range.beta_plus;
      double v = ev.rate(beta);
      CHECK(v > 0.0);
      for (double delta : {0.1, 0.5, 1.0}) {
        double v2 = ev.rate((1.0 + delta) * beta);
        if (std::isfinite(v2)) CHECK(v2 > v);
      }
    }
  }
}

TEST_CASE("action: linear curves, zero curve, out-of-range slopes") {
  RateEvaluator ev = fair_evaluator();
  // Grid 1 keeps the slope bit-exact, so the action equals I(beta) exactly.
  StepCurve line1 = StepCurve::zero(1, 1);
  line1.at(1) = 0.5;
  CHECK(ev.action(line1) == ev.rate(0.5));

  StepCurve line12 = StepCurve::line(12, 0.5);
  CHECK(ev.action(line12) == doctest::Approx(ev.rate(0.5)).epsilon(1e-12));

  CHECK(ev.action(StepCurve::zero(7, 1)) == doctest::Approx(0.0));

  StepCurve wild = StepCurve::line(4, 1.5);  // slope above D
  CHECK(std::isinf(ev.action(wild)));
}

TEST_CASE("sigma squared: iid variance, coboundary degeneracy, Hessian") {
  Eigen::VectorXd dir(1);
  dir << 1.0;

  RateEvaluator fair = fair_evaluator();
  CHECK(fair.sigma_squared(dir) == doctest::Approx(1.0).epsilon(1e-10));

  Fixture cob = fixture("pair-coboundary-01");
  RateEvaluator evc(cob.model, cob.ell, cob.observable);
  CHECK(evc.sigma_squared(dir) == doctest::Approx(0.0).epsilon(1e-8));

  for (const char* name : {"iid-fair-pm1", "flip02-prod2", "drift3-l2",
                           "golden-gibbs-pm1", "quad4-l3"}) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    double s2 = ev.sigma_squared(dir);
    double h = 1e-4;
    double hess = (ev.log_mgf_rate(h) - 2.0 * ev.log_mgf_rate(0.0) +
                   ev.log_mgf_rate(-h)) /
                  (h * h);
    CHECK(s2 == doctest::Approx(hess).epsilon(1e-5));
  }

  Fixture v2 = fixture("vec2-l1");
  RateEvaluator ev2(v2.model, v2.ell, v2.observable);
  Eigen::VectorXd d2(2);
  d2 << 1.0, 1.0;
  double s2 = ev2.sigma_squared(d2);
  Eigen::VectorXd unit = d2 / d2.norm();
  double h = 1e-4;
  double hess = (ev2.log_mgf_rate(h * unit) + ev2.log_mgf_rate(-h * unit)) /
                (h * h);
  CHECK(s2 == doctest::Approx(hess).epsilon(1e-5));
}

TEST_CASE("degenerate observable: Pi identically zero; rate infinite off 0") {
  TransitionModel m = flip_chain(0.2);
  Observable zero = observable_from_values({0.0, 0.0});
  RateEvaluator ev(m, 1, zero);
  CHECK(ev.bound() == 0.0);
  CHECK(ev.log_mgf_rate(3.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev.rate(0.0) == doctest::Approx(0.0));
  CHECK(std::isinf(ev.rate(0.2)));
}

TEST_CASE("vector rate: ascent recovers grid conjugate on a 2d model") {
  Fixture f = fixture("vec2-l1");
  RateEvaluator ev(f.model, f.ell, f.observable);
  Eigen::VectorXd beta(2);
  beta << 0.2, -0.1;
  double ascent = ev.rate(beta);
  double grid_best = 0.0;
  for (double a0 = -6.0; a0 <= 6.0; a0 += 0.05)
    for (double a1 = -6.0; a1 <= 6.0; a1 += 0.05) {
      Eigen::VectorXd alpha(2);
      alpha << a0, a1;
      grid_best = std::max(grid_best,
                           alpha.dot(beta) - ev.log_mgf_rate(alpha));
    }
  CHECK(ascent >= grid_best - 1e-8);
  CHECK(ascent <= grid_best + 2e-3);  // grid pitch slack
  CHECK(ev.rate(Eigen::VectorXd::Zero(2)) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("eigenvalue oracle: growth ratio matches the spectral value") {
  Rng rng(2024);
  for (const char* name : {"iid-fair-pm1", "flip02-prod2", "quad4-l3"}) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd alpha(ev.dim());
      for (int c = 0; c < ev.dim(); ++c)
        alpha(c) = 6.0 * rng.uniform01() - 3.0;
      double main = ev.log_mgf_rate(alpha);
      double oracle =
          pi_growth_ratio(ev.product_model(), ev.observable(), alpha, 200);
      CHECK(main == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("beta range: attained extremes and witness invariants") {
  RateEvaluator fair = fair_evaluator();
  RangeReport r = beta_range(fair);
  CHECK(r.beta_plus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.beta_minus == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.beta_zero == r.beta_plus);

  // 2-state chain with self-loops and weights (+1, -1): the self-loop at
  // state 0 attains beta_plus = 1.
  TransitionModel m = flip_chain(0.3);
  Observable f = observable_from_values({1.0, -1.0});
  RateEvaluator ev(m, 1, f);
  RangeReport r2 = beta_range(ev);
  CHECK(r2.beta_plus == doctest::Approx(1.0));
  CHECK(r2.witness_plus == std::vector<int>{0});
  CHECK(r2.beta_minus == doctest::Approx(-1.0));
  CHECK(r2.witness_minus == std::vector<int>{1});

  // Restricted support: golden-mean chain never sustains the -1 state.
  Fixture gg = fixture("golden-gibbs-pm1");
  RateEvaluator evg(gg.model, gg.ell, gg.observable);
  RangeReport r3 = beta_range(evg);
  CHECK(r3.beta_plus < evg.bound());
  CHECK(r3.beta_minus < 0.0);
  // Witness means reproduce the reported values exactly.
  WeightedGraph g = WeightedGraph::from_support(
      evg.product_model(), evg.observable().table.col(0));
  double mean = 0.0;
  for (std::size_t i = 0; i < r3.witness_plus.size(); ++i) {
    int u = r3.witness_plus[i];
    int v = r3.witness_plus[(i + 1) % r3.witness_plus.size()];
    for (std::size_t e = 0; e < g.succ[u].size(); ++e)
      if (g.succ[u][e] == v) mean += g.weight[u][e];
  }
  mean /= static_cast<double>(r3.witness_plus.size());
  CHECK(mean == doctest::Approx(r3.beta_plus).epsilon(1e-12));

  Fixture v2 = fixture("vec2-l1");
  RateEvaluator ev2(v2.model, v2.ell, v2.observable);
  CHECK_THROWS_AS(beta_range(ev2), DimensionNotScalar);
}

TEST_CASE("karp equals brute force on assorted small graphs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    nlohmann::json params{{"graphs", 1}, {"max_nodes", 6},
                          {"seed", 1000 + seed}};
    OracleOutcome out = run_oracle("cycles", params);
    CHECK(out.pass);
  }
}

TEST_CASE("rate essential-range consistency") {
  Fixture gg = fixture("golden-gibbs-pm1");
  RateEvaluator ev(gg.model, gg.ell, gg.observable);
  RangeReport r = beta_range(ev);
  // Finite strictly inside the open interval.
  for (double frac : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
    double beta = frac > 0 ? frac * r.beta_plus : -frac * r.beta_minus;
    CHECK(std::isfinite(ev.rate(beta)));
  }
  // Infinite beyond the bound D.
  CHECK(std::isinf(ev.rate(ev.bound() + 0.05)));
  CHECK(std::isinf(ev.rate(-ev.bound() - 0.05)));
}
