#include <cmath>
#include <set>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/model_zoo.hpp"
#include "core/rng.hpp"
#include "core/transition_model.hpp"

using namespace nclln;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

TransitionModel random_model(std::uint64_t seed, int states) {
  Rng rng(seed);
  TransitionModel m;
  m.label = "random";
  m.kernel.resize(states, states);
  for (int i = 0; i < states; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < states; ++j) {
      double v = -std::log(1.0 - rng.uniform01());
      m.kernel(i, j) = v;
      row_sum += v;
    }
    m.kernel.row(i) /= row_sum;
  }
  m.stationary = stationary_distribution(m.kernel);
  return m;
}

}  // namespace

TEST_CASE("doeblin constant: uniform kernel attains 1") {
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.5;
  CHECK(validate_doeblin(mat2(0.5, 0.5, 0.5, 0.5), mu) == doctest::Approx(1.0));
}

TEST_CASE("doeblin constant: flip kernel ratio enumeration") {
  // Entry ratios kernel/mu are {1.8, 0.2}; the sandwich constant is the
  // smallest of min(r, 1/r) over entries.
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.5;
  double expected = 1.0;
  for (double r : {0.9 / 0.5, 0.1 / 0.5, 0.1 / 0.5, 0.9 / 0.5})
    expected = std::min(expected, std::min(r, 1.0 / r));
  CHECK(validate_doeblin(mat2(0.9, 0.1, 0.1, 0.9), mu) ==
        doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.2));
}

TEST_CASE("doeblin constant: zero entry rejected") {
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.5;
  CHECK_THROWS_AS(validate_doeblin(mat2(1.0, 0.0, 0.0, 1.0), mu),
                  DoeblinViolated);
}

TEST_CASE("stationary distribution: symmetric and asymmetric kernels") {
  Eigen::VectorXd mu = stationary_distribution(mat2(0.5, 0.5, 0.5, 0.5));
  CHECK(mu(0) == doctest::Approx(0.5).epsilon(1e-14));
  // mu P = mu solved by hand: mu0 = 2/3, mu1 = 1/3.
  mu = stationary_distribution(mat2(0.9, 0.1, 0.2, 0.8));
  CHECK(mu(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(mu(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(stationary_distribution(mat2(1.0, 0.0, 0.0, 1.0)),
                  NotPrimitive);
}

TEST_CASE("primitivity: period-2 permutation rejected") {
  CHECK(!is_primitive(mat2(0.0, 1.0, 1.0, 0.0)));
  CHECK(is_primitive(mat2(0.5, 0.5, 1.0, 0.0)));
}

TEST_CASE("psi coefficient: flip chain decays exactly geometrically") {
  TransitionModel m = flip_chain(0.1);
  // P^n has entries (1 +- 0.8^n)/2, so psi(n) = 0.8^n.
  CHECK(psi_coefficient(m, 3) == doctest::Approx(0.512).epsilon(1e-13));
  for (int n = 1; n <= 40; ++n)
    CHECK(psi_coefficient(m, n) ==
          doctest::Approx(std::pow(0.8, n)).epsilon(1e-10));
  // One-step independence for i.i.d. rows.
  TransitionModel iid = iid_chain({0.5, 0.5}, "iid");
  CHECK(psi_coefficient(iid, 1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("psi coefficient: monotone decay for random primitive models") {
  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    TransitionModel m = random_model(seed, 3);
    MixingProfile prof = mixing_profile(m, 50);
    for (std::size_t i = 1; i < prof.psi.size(); ++i)
      CHECK(prof.psi[i] <= prof.psi[i - 1] + 1e-12);
  }
}

TEST_CASE("mixing profile: log-affine fit for the flip family") {
  TransitionModel m = flip_chain(0.1);
  MixingProfile prof = mixing_profile(m, 40);
  CHECK(prof.fitted_rate == doctest::Approx(-std::log(0.8)).epsilon(1e-6));
  CHECK(prof.fitted_prefactor == doctest::Approx(1.0).epsilon(1e-6));
  // Residuals of ln psi against the fit are tiny for exact geometric decay.
  for (int n = 1; n <= 40; ++n) {
    double fit = std::log(prof.fitted_prefactor) - prof.fitted_rate * n;
    CHECK(std::abs(std::log(prof.psi[n - 1]) - fit) < 1e-6);
  }
}

TEST_CASE("gibbs construction: full shift and golden mean") {
  Eigen::MatrixXi full(2, 2);
  full << 1, 1, 1, 1;
  GibbsResult g = gibbs_markov(full, Eigen::MatrixXd::Zero(2, 2));
  CHECK(g.pressure == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(g.model.kernel(i, j) == doctest::Approx(0.5).epsilon(1e-12));

  Eigen::MatrixXi golden(2, 2);
  golden << 1, 1, 1, 0;
  GibbsResult gm = gibbs_markov(golden, Eigen::MatrixXd::Zero(2, 2));
  double phi = 0.5 * (1.0 + std::sqrt(5.0));
  CHECK(gm.pressure == doctest::Approx(std::log(phi)).epsilon(1e-12));
  // Parry measure of the golden shift: mu0 = (5 + sqrt 5)/10.
  CHECK(gm.model.stationary(0) ==
        doctest::Approx((5.0 + std::sqrt(5.0)) / 10.0).epsilon(1e-10));
  CHECK(gm.model.kernel(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXi perm(2, 2);
  perm << 0, 1, 1, 0;
  CHECK_THROWS_AS(gibbs_markov(perm, Eigen::MatrixXd::Zero(2, 2)),
                  NotPrimitive);
}

TEST_CASE("product chain: ell=2 matches kron(P, P^2) and keeps mu x mu") {
  TransitionModel m = flip_chain(0.2);
  TransitionModel prod = product_chain(m, 2);
  Eigen::MatrixXd p2 = m.kernel * m.kernel;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          CHECK(prod.kernel(2 * a + b, 2 * c + d) ==
                doctest::Approx(m.kernel(a, c) * p2(b, d)).epsilon(1e-14));
  Eigen::VectorXd inv = stationary_distribution(prod.kernel);
  for (int i = 0; i < 4; ++i)
    CHECK(prod.stationary(i) == doctest::Approx(inv(i)).epsilon(1e-10));
  CHECK(product_chain(m, 1).kernel == m.kernel);
  CHECK_THROWS_AS(product_chain(m, 20, 1000), SizeCapExceeded);
}

TEST_CASE("product chain: marginal of coordinate i advances i steps each tick") {
  TransitionModel m = random_model(7ull, 3);
  TransitionModel prod = product_chain(m, 2);
  // Start at product state (x0, x1); after n product steps the law of
  // coordinate 1 is P^{2n}(x1, .).
  int n = 3;
  Eigen::MatrixXd qn = prod.kernel;
  for (int i = 1; i < n; ++i) qn = qn * prod.kernel;
  Eigen::MatrixXd p2n = m.kernel;
  for (int i = 1; i < 2 * n; ++i) p2n = p2n * m.kernel;
  for (int x0 = 0; x0 < 3; ++x0)
    for (int x1 = 0; x1 < 3; ++x1) {
      Eigen::VectorXd marg = Eigen::VectorXd::Zero(3);
      for (int y0 = 0; y0 < 3; ++y0)
        for (int y1 = 0; y1 < 3; ++y1)
          marg(y1) += qn(3 * x0 + x1, 3 * y0 + y1);
      for (int y1 = 0; y1 < 3; ++y1)
        CHECK(marg(y1) == doctest::Approx(p2n(x1, y1)).epsilon(1e-12));
    }
}

TEST_CASE("path sampling: determinism and stream equivalence") {
  TransitionModel m = flip_chain(0.1);
  PathSample a = sample_path(m, 10000, 7);
  PathSample b = sample_path(m, 10000, 7);
  CHECK(a.states == b.states);
  PathStream stream(m, 7);
  for (std::size_t t = 0; t < 200; ++t) CHECK(stream.next() == a.states[t]);
  PathSample c = sample_path(m, 10000, 8);
  CHECK(a.states != c.states);
}

TEST_CASE("path sampling: single state and empirical frequencies") {
  TransitionModel single;
  single.label = "point";
  single.kernel = Eigen::MatrixXd::Ones(1, 1);
  single.stationary = Eigen::VectorXd::Ones(1);
  PathSample p = sample_path(single, 50, 3);
  for (auto s : p.states) CHECK(s == 0);

  TransitionModel m = flip_chain(0.1);
  const std::size_t len = 1000000;
  PathSample path = sample_path(m, len, 20240202ull);
  double count0 = 0;
  for (auto s : path.states) count0 += (s == 0);
  double freq = count0 / static_cast<double>(len);
  CHECK(std::abs(freq - 0.5) <= 5.0 * std::sqrt(0.25 / len) * 3.0);
}

TEST_CASE("model json round trip is bit faithful") {
  for (std::uint64_t seed : {5ull, 6ull}) {
    TransitionModel m = random_model(seed, 4);
    m.doeblin_kappa = validate_doeblin(m.kernel, m.stationary);
    TransitionModel back = TransitionModel::from_json(m.to_json());
    CHECK(back.kernel == m.kernel);
    CHECK(back.stationary == m.stationary);
    CHECK(back.doeblin_kappa == m.doeblin_kappa);
    CHECK(back.label == m.label);
  }
}

TEST_CASE("model invariants validated") {
  TransitionModel m = flip_chain(0.1);
  m.validate();
  TransitionModel bad = m;
  bad.kernel(0, 0) += 1e-6;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = m;
  bad.stationary << 0.9, 0.1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = m;
  bad.doeblin_kappa = 0.9;  // true constant is 0.2
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
