#include "core/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/cycles.hpp"
#include "core/errors.hpp"
#include "core/model_zoo.hpp"
#include "core/occupation.hpp"
#include "core/rng.hpp"

namespace nclln {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double pi_growth_ratio(const TransitionModel& product,
                       const Observable& observable,
                       const Eigen::VectorXd& alpha, int n) {
  const int s = product.state_count();
  Eigen::MatrixXd m(s, s);
  for (int x = 0; x < s; ++x)
    for (int y = 0; y < s; ++y)
      m(x, y) = product.kernel(x, y) *
                std::exp(alpha.dot(observable.table.row(y).transpose()));
  Eigen::VectorXd v = Eigen::VectorXd::Ones(s);
  double ratio = 0.0;
  for (int k = 0; k < n + 1; ++k) {
    Eigen::VectorXd next = m * v;
    double total = next.sum();
    ratio = total / v.sum();
    v = next / total;  // rescale; ratios of consecutive mass totals survive
  }
  return std::log(ratio);
}

double dense_curve_distance(const RateEvaluator& evaluator,
                            const StepCurve& gamma, double a,
                            double tube_tol) {
  const int n = gamma.grid;
  const double d = evaluator.bound();
  if (d == 0.0) {
    double worst = 0.0;
    for (int j = 0; j <= n; ++j) worst = std::max(worst, std::abs(gamma.at(j)));
    return worst;
  }
  const double q = tube_tol / 16.0;  // 4x the main solver's pitch
  const double dz = n * q;
  const long long k_half = static_cast<long long>(std::floor(d / dz)) + 1;
  std::vector<double> itab(static_cast<std::size_t>(2 * k_half + 1));
  for (long long k = -k_half; k <= k_half; ++k) {
    double z = static_cast<double>(k) * dz;
    itab[static_cast<std::size_t>(k + k_half)] =
        std::abs(z) > d ? kInf : evaluator.rate(z);
  }

  auto feasible = [&](double delta) {
    long long pl = 0, ph = 0;
    std::vector<double> prev{0.0};
    for (int j = 1; j <= n; ++j) {
      double g = gamma.at(j);
      long long cl = static_cast<long long>(std::ceil((g - delta) / q - 1e-12));
      long long ch = static_cast<long long>(std::floor((g + delta) / q + 1e-12));
      if (ch < cl) return false;
      std::vector<double> cur(static_cast<std::size_t>(ch - cl + 1), kInf);
      for (long long i = cl; i <= ch; ++i) {
        double best = kInf;
        long long lo = std::max(pl, i - k_half);
        long long hi = std::min(ph, i + k_half);
        for (long long p = lo; p <= hi; ++p) {
          double base = prev[static_cast<std::size_t>(p - pl)];
          if (base == kInf) continue;
          double w = itab[static_cast<std::size_t>(i - p + k_half)];
          if (w == kInf) continue;
          best = std::min(best, base + w);
        }
        cur[static_cast<std::size_t>(i - cl)] = best;
      }
      prev.swap(cur);
      pl = cl;
      ph = ch;
    }
    double best = kInf;
    for (double v : prev) best = std::min(best, v);
    return best <= a * n * (1.0 + 1e-12) + 1e-12;
  };

  if (evaluator.action(gamma) <= a) return 0.0;
  double mean = evaluator.mean_slope()(0);
  double hi = q;
  for (int j = 0; j <= n; ++j)
    hi = std::max(hi, std::abs(gamma.at(j) - mean * j / n) + q);
  while (!feasible(hi)) hi = 2.0 * hi + tube_tol;
  double lo = 0.0;
  while (hi - lo > tube_tol / 2.0) {
    double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

namespace {

OracleOutcome oracle_pi_growth(const nlohmann::json& params) {
  double tol = params.value("tol", 1e-6);
  int n = params.value("n", 200);
  int count = params.value("alphas", 20);
  double radius = params.value("radius", 3.0);
  std::uint64_t seed = params.value("seed", 20240101ull);

  std::vector<std::string> names;
  if (params.contains("fixture"))
    names.push_back(params["fixture"].get<std::string>());
  else
    names = fixture_names();

  OracleOutcome out;
  out.pass = true;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& name : names) {
    Fixture f = fixture(name);
    RateEvaluator ev(f.model, f.ell, f.observable);
    Rng rng(derive_seed(seed, "pi-growth:" + name));
    double worst = 0.0;
    for (int t = 0; t < count; ++t) {
      Eigen::VectorXd alpha(ev.dim());
      for (int c = 0; c < ev.dim(); ++c)
        alpha(c) = (2.0 * rng.uniform01() - 1.0) * radius;
      if (alpha.norm() > radius) alpha *= radius / alpha.norm();
      double main = ev.log_mgf_rate(alpha);
      double oracle =
          pi_growth_ratio(ev.product_model(), ev.observable(), alpha, n);
      worst = std::max(worst, std::abs(main - oracle));
    }
    rows.push_back({{"fixture", name}, {"max_abs_diff", worst}, {"tol", tol}});
    if (worst > tol) out.pass = false;
  }
  out.summary = {{"subtarget", "pi-growth"}, {"rows", rows}};
  return out;
}

OracleOutcome oracle_curve_dp(const nlohmann::json& params) {
  std::string name = params.value("fixture", std::string("iid-fair-pm1"));
  double a = params.value("a", 0.13);
  double tube_tol = params.value("tube_tol", 4e-3);
  int grid = params.value("grid", 8);
  int count = params.value("curves", 50);
  std::uint64_t seed = params.value("seed", 77001ull);

  Fixture f = fixture(name);
  RateEvaluator ev(f.model, f.ell, f.observable);
  DistParams dp;
  dp.tube_tol = tube_tol;

  Rng rng(derive_seed(seed, "curve-dp"));
  double worst = 0.0;
  int checked = 0;
  for (int t = 0; t < count; ++t) {
    StepCurve g = StepCurve::zero(grid, 1);
    double scale = 0.2 + 0.8 * rng.uniform01();
    for (int j = 1; j <= grid; ++j) {
      double slope = (2.0 * rng.uniform01() - 1.0) * ev.bound() * scale;
      g.at(j) = g.at(j - 1) + slope / grid;
    }
    double main = dist_to_level_set(ev, g, a, dp);
    double oracle = dense_curve_distance(ev, g, a, tube_tol);
    worst = std::max(worst, std::abs(main - oracle));
    ++checked;
  }
  OracleOutcome out;
  out.pass = worst <= 2.0 * tube_tol;
  out.summary = {{"subtarget", "curve-dp"},
                 {"curves", checked},
                 {"max_abs_diff", worst},
                 {"tol", 2.0 * tube_tol}};
  return out;
}

WeightedGraph random_product_graph(std::uint64_t seed, int max_nodes) {
  Rng rng(seed);
  // Random primitive support on up to max_nodes nodes with random head
  // weights; self-loop on node 0 guarantees aperiodicity.
  int n = 2 + static_cast<int>(rng.uniform01() * (max_nodes - 1));
  n = std::min(n, max_nodes);
  WeightedGraph g;
  g.nodes = n;
  g.succ.resize(n);
  g.weight.resize(n);
  std::vector<double> node_weight(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    node_weight[static_cast<std::size_t>(v)] = 2.0 * rng.uniform01() - 1.0;
  for (int u = 0; u < n; ++u) {
    g.succ[u].push_back((u + 1) % n);  // ring keeps it strongly connected
    for (int v = 0; v < n; ++v) {
      if (v == (u + 1) % n) continue;
      bool self_loop_anchor = (u == 0 && v == 0);
      if (self_loop_anchor || rng.uniform01() < 0.45) g.succ[u].push_back(v);
    }
    std::sort(g.succ[u].begin(), g.succ[u].end());
    g.succ[u].erase(std::unique(g.succ[u].begin(), g.succ[u].end()),
                    g.succ[u].end());
    for (int v : g.succ[u])
      g.weight[u].push_back(node_weight[static_cast<std::size_t>(v)]);
  }
  return g;
}

OracleOutcome oracle_cycles(const nlohmann::json& params) {
  int count = params.value("graphs", 25);
  int max_nodes = params.value("max_nodes", 8);
  std::uint64_t seed = params.value("seed", 31415ull);

  OracleOutcome out;
  out.pass = true;
  double worst = 0.0;
  for (int t = 0; t < count; ++t) {
    WeightedGraph g =
        random_product_graph(derive_seed(seed, "cycles:" + std::to_string(t)),
                             max_nodes);
    for (bool maximize : {true, false}) {
      MeanCycle karp = karp_mean_cycle(g, maximize);
      MeanCycle brute = brute_force_mean_cycle(g, maximize);
      double diff = std::abs(karp.mean - brute.mean);
      worst = std::max(worst, diff);
      if (diff != 0.0) out.pass = false;
    }
  }
  out.summary = {{"subtarget", "cycles"},
                 {"graphs", count},
                 {"max_abs_diff", worst},
                 {"tol", 0.0}};
  return out;
}

OracleOutcome oracle_contraction(const nlohmann::json& params) {
  double p = params.value("p", 0.1);
  double tol = params.value("tol", 5e-3);
  int resolution = params.value("resolution", 399);
  std::vector<double> betas{0.1, 0.3, 0.5};
  if (params.contains("betas"))
    betas = params["betas"].get<std::vector<double>>();

  TransitionModel model = flip_chain(p);
  Observable obs = observable_from_values({1.0, -1.0});
  RateEvaluator ev(model, 1, obs);
  Eigen::VectorXd g(2);
  g << 1.0, -1.0;

  OracleOutcome out;
  out.pass = true;
  nlohmann::json rows = nlohmann::json::array();
  for (double beta : betas) {
    double direct = ev.rate(beta);
    ContractionResult cr = contraction_check(model, g, beta, resolution);
    double diff = std::abs(direct - cr.inf_J);
    rows.push_back({{"beta", beta},
                    {"rate_function", direct},
                    {"contraction", cr.inf_J},
                    {"abs_diff", diff}});
    if (diff > tol) out.pass = false;
  }
  out.summary = {{"subtarget", "contraction"}, {"tol", tol}, {"rows", rows}};
  return out;
}

}  // namespace

OracleOutcome run_oracle(const std::string& subtarget,
                         const nlohmann::json& params) {
  if (subtarget == "pi-growth") return oracle_pi_growth(params);
  if (subtarget == "curve-dp") return oracle_curve_dp(params);
  if (subtarget == "cycles") return oracle_cycles(params);
  if (subtarget == "contraction") return oracle_contraction(params);
  throw UnknownOracle("unknown oracle subtarget '" + subtarget + "'");
}

}  // namespace nclln
