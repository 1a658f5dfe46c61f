#include <cmath>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/model_zoo.hpp"
#include "core/observable.hpp"
#include "core/sums.hpp"

using namespace nclln;

namespace {

PathSample fixed_path(std::vector<std::uint32_t> states) {
  PathSample p;
  p.states = std::move(states);
  p.seed = 0;
  p.model_label = "fixed";
  return p;
}

}  // namespace

TEST_CASE("observable centering: constants, idempotence, hand expectation") {
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.5;

  Observable constant = observable_product({1.0, 1.0}, 2);
  Observable centered = center_observable(constant, mu);
  for (long long r = 0; r < centered.table_rows(); ++r)
    CHECK(centered.table(r, 0) == doctest::Approx(0.0).epsilon(1e-15));

  // F(a,b) = a*b on states {0,1}: F-bar = 1/4, so F'(1,1) = 3/4.
  Observable prod = observable_product({0.0, 1.0}, 2);
  Observable c = center_observable(prod, mu);
  CHECK(c.mean.isZero(1e-15));
  CHECK(c.centered);
  CHECK(c.table(3, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c.table(0, 0) == doctest::Approx(-0.25).epsilon(1e-15));

  Observable twice = center_observable(c, mu);
  for (long long r = 0; r < c.table_rows(); ++r)
    CHECK(twice.table(r, 0) == doctest::Approx(c.table(r, 0)).epsilon(1e-15));

  CHECK(c.bound_D == doctest::Approx(0.75));
}

TEST_CASE("nonconventional prefix sums: hand enumeration of q-indices") {
  // F(a,b) = a*b, path x1..x4; Sigma_2 = x1 x2 + x2 x4.
  Observable f = observable_product({0.0, 1.0}, 2);
  PathSample p = fixed_path({1, 1, 0, 1});
  IndexMaps q = IndexMaps::linear(2);
  PrefixSums s = prefix_sums_nonconventional(p, f, 2, q);
  CHECK(s.at(0) == 0.0);
  CHECK(s.at(1) == 1.0);   // x1*x2 = 1
  CHECK(s.at(2) == 2.0);   // + x2*x4 = 1
  CHECK_THROWS_AS(prefix_sums_nonconventional(p, f, 3, q), PathTooShort);
}

TEST_CASE("prefix sums: ell=1 reduces to ordinary sums; zero observable") {
  Observable f = observable_from_values({1.0, -1.0});
  PathSample p = fixed_path({0, 1, 1, 0, 0});
  IndexMaps q = IndexMaps::linear(1);
  PrefixSums s = prefix_sums_nonconventional(p, f, 5, q);
  std::vector<double> expect{0, 1, 0, -1, 0, 1};
  for (int k = 0; k <= 5; ++k) CHECK(s.at(k) == expect[static_cast<std::size_t>(k)]);

  Observable zero = observable_from_values({0.0, 0.0});
  PrefixSums sz = prefix_sums_nonconventional(p, zero, 5, q);
  for (int k = 0; k <= 5; ++k) CHECK(sz.at(k) == 0.0);
}

TEST_CASE("prefix sums linearity and increment bound") {
  TransitionModel m = flip_chain(0.2);
  PathSample p = sample_path(m, 200, 42);
  IndexMaps q = IndexMaps::linear(2);
  Observable f = observable_product({1.0, -1.0}, 2);
  Observable g = observable_product({0.5, 1.5}, 2);
  Observable combo = f;
  combo.table = 2.0 * f.table + 3.0 * g.table;
  combo.finalize();

  PrefixSums sf = prefix_sums_nonconventional(p, f, 100, q);
  PrefixSums sg = prefix_sums_nonconventional(p, g, 100, q);
  PrefixSums sc = prefix_sums_nonconventional(p, combo, 100, q);
  for (int k = 0; k <= 100; ++k)
    CHECK(sc.at(k) == doctest::Approx(2.0 * sf.at(k) + 3.0 * sg.at(k))
                          .epsilon(1e-12));
  for (int k = 1; k <= 100; ++k)
    CHECK(std::abs(sf.at(k) - sf.at(k - 1)) <= f.bound_D + 1e-15);
}

TEST_CASE("window shift identity") {
  TransitionModel m = flip_chain(0.3);
  PathSample p = sample_path(m, 400, 9);
  Observable f = observable_from_values({1.0, -1.0});
  IndexMaps q = IndexMaps::linear(1);
  PrefixSums s = prefix_sums_nonconventional(p, f, 400, q);
  double d = f.bound_D;
  for (long long m0 : {0ll, 10ll, 50ll})
    for (long long k : {1ll, 3ll, 7ll})
      for (long long j : {5ll, 20ll}) {
        double lhs = std::abs((s.at(m0 + j) - s.at(m0)) -
                              (s.at(m0 + k + j) - s.at(m0 + k)));
        CHECK(lhs <= 2.0 * k * d + 1e-12);
      }
}

TEST_CASE("independent copies: seed collision and ell=1 reduction") {
  TransitionModel m = flip_chain(0.2);
  Observable f = observable_from_values({1.0, -1.0});
  IndexMaps q = IndexMaps::linear(1);
  std::vector<PathSample> same{sample_path(m, 50, 5), };
  PrefixSums t = independent_copies_prefix_sums(same, f, 50, q);
  PrefixSums s = prefix_sums_nonconventional(same[0], f, 50, q);
  for (int k = 0; k <= 50; ++k) CHECK(t.at(k) == s.at(k));

  Observable f2 = observable_product({1.0, -1.0}, 2);
  IndexMaps q2 = IndexMaps::linear(2);
  std::vector<PathSample> dup{sample_path(m, 100, 5), sample_path(m, 200, 5)};
  CHECK_THROWS_AS(independent_copies_prefix_sums(dup, f2, 50, q2),
                  SeedCollision);
}

TEST_CASE("nonlinear index maps: power map uses iid copies") {
  TransitionModel m = flip_chain(0.2);
  IndexMaps q;
  q.maps.resize(2);
  q.maps[0].kind = IndexMap::Kind::linear;
  q.maps[0].factor = 1;
  q.maps[1].kind = IndexMap::Kind::power;
  q.maps[1].exponent = 2;
  q.linear_prefix = 1;
  q.validate(10);
  CHECK(q.maps[1](3) == 9);

  auto paths = make_copy_paths(m, q, 10, {1, 2});
  CHECK(paths[0].length() == 10);
  CHECK(paths[1].length() == 100);
  Observable f2 = observable_product({0.0, 1.0}, 2);
  PrefixSums t = independent_copies_prefix_sums(paths, f2, 10, q);
  // Increment k uses X^(1)_k and X^(2)_{k^2}.
  double expect = 0.0;
  for (int k = 1; k <= 10; ++k)
    expect += static_cast<double>(paths[0].states[k - 1]) *
              static_cast<double>(paths[1].states[k * k - 1]);
  CHECK(t.at(10) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("window length brackets") {
  CHECK(window_length(1000, 2.0) == 13);           // floor(13.815...)
  CHECK_THROWS_AS(window_length(2, 1.0), WindowTooShort);  // floor(0.693) = 0
  CHECK(window_length(2, 1.0 / std::log(2.0)) == 1);       // exact boundary
}

TEST_CASE("window curves and families") {
  TransitionModel m = flip_chain(0.2);
  PathSample p = sample_path(m, 1000, 11);
  Observable f = observable_from_values({1.0, -1.0});
  IndexMaps q = IndexMaps::linear(1);
  auto prefix = std::make_shared<PrefixSums>(
      prefix_sums_nonconventional(p, f, 1000, q));
  CurveFamily fam = window_family(prefix, 1000, 2.0);
  CHECK(fam.b == 13);
  CHECK(fam.count() == 988);

  StepCurve c0 = fam.curve(0);
  CHECK(c0.values[0] == 0.0);
  CHECK(c0.at(fam.b) ==
        doctest::Approx((prefix->at(13) - prefix->at(0)) / 13.0));
  // Steps move by at most D/b; curves bounded by D.
  for (long long mm = 0; mm < fam.count(); mm += 97) {
    StepCurve c = fam.curve(mm);
    for (int j = 1; j <= fam.b; ++j) {
      CHECK(std::abs(c.at(j) - c.at(j - 1)) <= f.bound_D / fam.b + 1e-15);
      CHECK(std::abs(c.at(j)) <= f.bound_D + 1e-15);
    }
  }
  CHECK_THROWS_AS(window_curve(*prefix, 988, 1000, 2.0), OffsetOutOfRange);

  // Degenerate family: n == b gives the single offset zero.
  auto short_prefix = std::make_shared<PrefixSums>(
      prefix_sums_nonconventional(p, f, 13, q));
  CurveFamily tiny = window_family(short_prefix, 13, 13.0 / std::log(13.0) *
                                                         (1.0 - 1e-12));
  CHECK(tiny.b == 13);
  CHECK(tiny.count() == 1);
}

TEST_CASE("streaming window max equals materialized computation") {
  TransitionModel m = flip_chain(0.2);
  Observable f = observable_product({1.0, -1.0}, 2);
  IndexMaps q = IndexMaps::linear(2);
  const long long n = 500;
  const int b = 12;
  const std::uint64_t seed = 314;

  WindowMaxResult wm = scalar_window_max_streaming(m, f, q, n, b, seed);

  PathSample p = sample_path(m, 2 * n, seed);
  PrefixSums s = prefix_sums_nonconventional(p, f, n, q);
  double best = -1e300;
  long long arg = -1;
  for (long long m0 = 0; m0 + b <= n; ++m0) {
    double avg = (s.at(m0 + b) - s.at(m0)) / b;
    if (avg > best) {
      best = avg;
      arg = m0;
    }
  }
  CHECK(wm.max_avg == doctest::Approx(best).epsilon(1e-12));
  CHECK(wm.arg_offset == arg);
}

TEST_CASE("curve family csv carries the header line") {
  PrefixSums s;
  s.n = 3;
  s.dim = 1;
  s.data = {0.0, 1.0, 0.0, 1.0};
  auto prefix = std::make_shared<PrefixSums>(s);
  CurveFamily fam;
  fam.prefix = prefix;
  fam.n = 3;
  fam.c = 2.0;
  fam.b = 2;
  std::string csv = curve_family_to_csv(fam);
  CHECK(csv.find("# n=3,c=2,b=2,d=1") == 0);
  CHECK(csv.find("m,j,value_0") != std::string::npos);
}
