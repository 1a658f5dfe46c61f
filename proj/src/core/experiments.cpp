#include "core/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "core/cycles.hpp"
#include "core/errors.hpp"
#include "core/level_set.hpp"
#include "core/model_zoo.hpp"
#include "core/rate_evaluator.hpp"
#include "core/rng.hpp"

namespace nclln {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json json_num(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

void run_tasks(std::size_t count, int threads,
               const std::function<void(std::size_t)>& fn) {
  int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ResolvedLaw {
  TransitionModel model;
  Observable observable;
  std::unique_ptr<RateEvaluator> evaluator;
};

ResolvedLaw resolve_law(const ExperimentConfig& cfg, bool need_evaluator) {
  ResolvedLaw r;
  r.model = build_model(cfg.model_spec);
  if (!cfg.observable_spec.is_null())
    r.observable =
        build_observable(cfg.observable_spec, r.model, cfg.ell, cfg.center);
  if (need_evaluator) {
    if (cfg.observable_spec.is_null())
      throw ValidationError("law '" + cfg.law + "' requires an observable");
    r.evaluator =
        std::make_unique<RateEvaluator>(r.model, cfg.ell, r.observable);
  }
  return r;
}

nlohmann::json psi_fit_json(const TransitionModel& model) {
  MixingProfile prof = mixing_profile(model, 30);
  return {{"n_max", 30},
          {"fitted_rate", prof.fitted_rate},
          {"fitted_prefactor", prof.fitted_prefactor},
          {"psi_1", prof.psi.front()}};
}

std::uint64_t task_seed(std::uint64_t master, const std::string& law,
                        long long n, std::uint64_t seed_entry,
                        const std::string& extra = "") {
  std::ostringstream os;
  os << law << ":n=" << n << ":seed=" << seed_entry;
  if (!extra.empty()) os << ":" << extra;
  return derive_seed(master, os.str());
}

// ---------------------------------------------------------------------------
// scalar / classical Erdos-Renyi law

RunReport run_scalar(const ExperimentConfig& cfg, const RunOptions& opt,
                     bool classical) {
  ResolvedLaw r = resolve_law(cfg, true);
  RateEvaluator& ev = *r.evaluator;
  if (ev.dim() != 1)
    throw DimensionNotScalar("the scalar law requires d = 1");
  if (ev.bound() == 0.0)
    throw ValidationError("degenerate observable: F = 0 has no scalar law");
  if (classical) {
    if (cfg.ell != 1)
      throw ValidationError("the classical law requires ell = 1");
    for (int i = 0; i < r.model.state_count(); ++i)
      for (int j = 0; j < r.model.state_count(); ++j)
        if (std::abs(r.model.kernel(i, j) - r.model.stationary(j)) > 1e-12)
          throw ValidationError("the classical law requires an i.i.d. model");
  }
  Eigen::VectorXd dir(1);
  dir << 1.0;
  double sigma2 = ev.sigma_squared(dir);
  if (sigma2 <= 1e-12)
    throw ValidationError("zero asymptotic variance; rate analysis degenerate");

  RangeReport range = beta_range(ev);
  double mean = ev.mean_slope()(0);
  double low = classical ? mean : 0.0;
  if (!(cfg.beta > low && cfg.beta < range.beta_zero)) {
    std::ostringstream os;
    os << "beta = " << cfg.beta << " outside the admissible range (" << low
       << ", " << range.beta_zero << ") for the scalar law";
    throw BetaOutOfRange(os.str());
  }
  double i_beta = ev.rate(cfg.beta);
  if (!std::isfinite(i_beta) || i_beta <= 1e-12)
    throw BetaOutOfRange("I(beta) must be finite and positive to set c");
  double c = 1.0 / i_beta;
  if (c * std::log(static_cast<double>(cfg.n_schedule.front())) < 1.0)
    throw WindowTooShort("c ln(min n) < 1 for the resolved c = 1/I(beta)");

  std::uint64_t master = opt.seed_override.value_or(cfg.master_seed);
  IndexMaps q = IndexMaps::linear(cfg.ell);

  struct Task {
    long long n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (long long n : cfg.n_schedule)
    for (auto s : cfg.seeds) tasks.push_back({n, s});
  std::vector<nlohmann::json> recs(tasks.size());

  run_tasks(tasks.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    long long n = tasks[i].n;
    std::uint64_t seed = tasks[i].seed;
    int b = window_length(n, c);
    std::uint64_t derived = task_seed(master, cfg.law, n, seed);
    WindowMaxResult wm =
        scalar_window_max_streaming(r.model, ev.observable(), q, n, b, derived);
    bool envelope_ok = wm.max_avg <= range.beta_plus + 1.0 / b + 1e-9;
    recs[i] = {{"n", n},
               {"seed", seed},
               {"derived_seed", derived},
               {"b", b},
               {"m_n", wm.max_avg},
               {"argmax_offset", wm.arg_offset},
               {"target_beta", cfg.beta},
               {"abs_gap", std::abs(wm.max_avg - cfg.beta)},
               {"envelope_ok", envelope_ok}};
  });

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo},
                     {"n_schedule", cfg.n_schedule},
                     {"beta", cfg.beta},
                     {"c", c},
                     {"i_beta", i_beta},
                     {"beta_plus", range.beta_plus},
                     {"beta_minus", range.beta_minus},
                     {"beta_zero", range.beta_zero},
                     {"sigma2", sigma2},
                     {"bound_d", ev.bound()},
                     {"mean", mean},
                     {"psi_fit", psi_fit_json(r.model)},
                     {"master_seed", master}};
  if (r.model.doeblin_kappa)
    report.resolved["doeblin_kappa"] = *r.model.doeblin_kappa;
  report.records = recs;
  report.csv_columns = {"n",   "seed",        "b",
                        "m_n", "target_beta", "abs_gap",
                        "envelope_ok"};
  return report;
}

// ---------------------------------------------------------------------------
// functional law

RunReport run_functional(const ExperimentConfig& cfg, const RunOptions& opt) {
  ResolvedLaw r = resolve_law(cfg, true);
  RateEvaluator& ev = *r.evaluator;
  if (ev.dim() != 1)
    throw DimensionNotScalar("the functional run requires d = 1");
  double a = cfg.a;
  double c = 1.0 / a;

  LevelSetNet net = level_set_net(ev, a, cfg.net_epsilon, cfg.net_segments,
                                  cfg.net_pitch, cfg.net_cap);
  bool has_nonzero = false;
  for (const auto& pos : net.positions)
    for (double v : pos)
      if (std::abs(v) > 1e-15) has_nonzero = true;
  if (!has_nonzero && ev.bound() > 0.0)
    throw ValidationError(
        "Phi(1/c) contains no nonzero net member; increase a or refine the "
        "net");

  std::uint64_t master = opt.seed_override.value_or(cfg.master_seed);
  IndexMaps q = IndexMaps::linear(cfg.ell);

  struct Task {
    long long n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (long long n : cfg.n_schedule)
    for (auto s : cfg.seeds) tasks.push_back({n, s});
  std::vector<nlohmann::json> recs(tasks.size());

  HausdorffParams hp;
  hp.dist.tube_tol = cfg.tube_tol;

  run_tasks(tasks.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    long long n = tasks[i].n;
    std::uint64_t seed = tasks[i].seed;
    std::uint64_t derived = task_seed(master, cfg.law, n, seed);
    PathSample path =
        sample_path(r.model, static_cast<std::size_t>(q.max_index(n)), derived);
    auto prefix = std::make_shared<PrefixSums>(
        prefix_sums_nonconventional(path, ev.observable(), n, q));
    CurveFamily w = window_family(prefix, n, c);
    HausdorffBreakdown stats;
    double h = hausdorff_distance(w, net, ev, a, hp, &stats);
    recs[i] = {{"n", n},
               {"seed", seed},
               {"derived_seed", derived},
               {"b", w.b},
               {"H", h},
               {"first_direction", stats.first_direction},
               {"second_direction", stats.second_direction},
               {"net_epsilon", cfg.net_epsilon},
               {"dp_solves", stats.dp_solves},
               {"action_pruned", stats.windows_pruned_by_action}};
  });

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo},
                     {"n_schedule", cfg.n_schedule},
                     {"a", a},
                     {"c", c},
                     {"net_size", net.count()},
                     {"net_epsilon", cfg.net_epsilon},
                     {"net_segments", cfg.net_segments},
                     {"net_pitch", net.pitch},
                     {"bound_d", ev.bound()},
                     {"psi_fit", psi_fit_json(r.model)},
                     {"master_seed", master}};
  report.records = recs;
  report.csv_columns = {"n",  "seed",            "b",
                        "H",  "first_direction", "second_direction",
                        "net_epsilon", "dp_solves"};
  return report;
}

// ---------------------------------------------------------------------------
// ld bounds (Monte Carlo check of the large deviations estimates)

struct LdEnvelope {
  std::vector<int> lags;
  std::vector<double> env;
};

LdEnvelope make_ld_envelope(const RateEvaluator& ev, double a, int n) {
  LdEnvelope e;
  for (int f : {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233})
    if (f < n) e.lags.push_back(f);
  e.lags.push_back(n);
  e.env.resize(e.lags.size());
  for (std::size_t i = 0; i < e.lags.size(); ++i) {
    double du = static_cast<double>(e.lags[i]) / n;
    double reach = std::max(std::abs(ev.inverse_rate_pos(a / du)),
                            std::abs(ev.inverse_rate_neg(a / du)));
    e.env[i] = du * std::min(reach, ev.bound());
  }
  return e;
}

RunReport run_ld_bounds(const ExperimentConfig& cfg, const RunOptions& opt) {
  ResolvedLaw r = resolve_law(cfg, true);
  RateEvaluator& ev = *r.evaluator;
  if (ev.dim() != 1) throw DimensionNotScalar("ld-bounds requires d = 1");
  std::uint64_t master = opt.seed_override.value_or(cfg.master_seed);
  IndexMaps q = IndexMaps::linear(cfg.ell);

  double slope = 0.0;
  bool slope_form = false;
  std::vector<double> gamma_values;
  if (cfg.gamma_spec.contains("slope")) {
    slope = cfg.gamma_spec["slope"].get<double>();
    slope_form = true;
  } else if (cfg.gamma_spec.contains("values")) {
    gamma_values = cfg.gamma_spec["values"].get<std::vector<double>>();
  } else {
    throw ValidationError("gamma needs 'slope' or 'values'");
  }

  std::vector<nlohmann::json> recs;
  for (long long n : cfg.n_schedule) {
    StepCurve gamma;
    double s_gamma;
    if (slope_form) {
      gamma = StepCurve::line(static_cast<int>(n), slope);
      s_gamma = ev.rate(slope);
    } else {
      if (static_cast<long long>(gamma_values.size()) != n + 1)
        throw ValidationError("gamma values must have n+1 entries");
      gamma.grid = static_cast<int>(n);
      gamma.dim = 1;
      gamma.values = gamma_values;
      s_gamma = ev.action(gamma);
    }
    if (!std::isfinite(s_gamma))
      throw ValidationError("S(gamma) must be finite for the lower bound");

    double lower_rhs = s_gamma + cfg.lambda;
    double upper_rhs = cfg.a - cfg.lambda;
    LdEnvelope env = make_ld_envelope(ev, cfg.a, static_cast<int>(n));
    DistParams dp;
    dp.tube_tol = cfg.tube_tol > 0 ? cfg.tube_tol : 2e-3 * ev.bound();
    const int mseg = std::min<long long>(12, n);
    const bool can_shrink = ev.rate_upper(0.0) <= 1e-12;

    for (std::uint64_t seed : cfg.seeds) {
      int threads = resolve_threads(opt.threads);
      std::vector<long long> p_hits(threads, 0), q_hits(threads, 0),
          dp_solves(threads, 0);
      long long rep = cfg.replicas;
      run_tasks(static_cast<std::size_t>(threads), threads, [&](std::size_t w) {
        long long lo = static_cast<long long>(w) * rep / threads;
        long long hi = static_cast<long long>(w + 1) * rep / threads;
        std::vector<double> t_prefix(static_cast<std::size_t>(n) + 1, 0.0);
        for (long long rrep = lo; rrep < hi; ++rrep) {
          // One independent Markov copy per coordinate.
          std::vector<std::uint64_t> cseeds(static_cast<std::size_t>(cfg.ell));
          for (int ci = 0; ci < cfg.ell; ++ci)
            cseeds[static_cast<std::size_t>(ci)] = task_seed(
                master, cfg.law, n, seed,
                "r=" + std::to_string(rrep) + ":i=" + std::to_string(ci));
          std::vector<PathStream> streams;
          std::vector<long long> pos(static_cast<std::size_t>(cfg.ell), 0);
          std::vector<std::uint32_t> cur(static_cast<std::size_t>(cfg.ell), 0);
          streams.reserve(static_cast<std::size_t>(cfg.ell));
          for (int ci = 0; ci < cfg.ell; ++ci)
            streams.emplace_back(r.model, cseeds[static_cast<std::size_t>(ci)]);
          const Observable& f = ev.observable();
          for (long long k = 1; k <= n; ++k) {
            long long idx = 0;
            for (int ci = 0; ci < cfg.ell; ++ci) {
              long long target = q.maps[static_cast<std::size_t>(ci)](k);
              while (pos[static_cast<std::size_t>(ci)] < target) {
                cur[static_cast<std::size_t>(ci)] =
                    streams[static_cast<std::size_t>(ci)].next();
                ++pos[static_cast<std::size_t>(ci)];
              }
              idx = idx * f.base_states + cur[static_cast<std::size_t>(ci)];
            }
            t_prefix[static_cast<std::size_t>(k)] =
                t_prefix[static_cast<std::size_t>(k - 1)] + f.table(idx, 0);
          }
          // rho(T/n, gamma) exactly.
          double rho_gamma = 0.0;
          for (long long jj = 1; jj <= n; ++jj)
            rho_gamma = std::max(
                rho_gamma, std::abs(t_prefix[static_cast<std::size_t>(jj)] / n -
                                    gamma.at(static_cast<int>(jj))));
          if (rho_gamma < cfg.delta) ++p_hits[w];

          // Distance to Phi(a): certified bounds first, exact solve when
          // they straddle delta.
          double lb = 0.0;
          for (std::size_t li = 0; li < env.lags.size(); ++li) {
            int lag = env.lags[li];
            for (long long ii = 0; ii + lag <= n; ++ii) {
              double big = std::abs(t_prefix[static_cast<std::size_t>(ii + lag)] -
                                    t_prefix[static_cast<std::size_t>(ii)]) /
                           n;
              double cand = 0.5 * (big - env.env[li]);
              if (cand > lb) lb = cand;
            }
          }
          if (lb >= cfg.delta) {
            ++q_hits[w];
            continue;
          }
          // Coarse projection upper bound.
          double stilde = 0.0;
          std::vector<double> knots(static_cast<std::size_t>(mseg));
          for (int k = 1; k <= mseg; ++k) {
            long long j0 = (k - 1) * n / mseg, j1 = k * n / mseg;
            double du = static_cast<double>(j1 - j0) / n;
            double dv = (t_prefix[static_cast<std::size_t>(j1)] -
                         t_prefix[static_cast<std::size_t>(j0)]) /
                        n;
            stilde += du * ev.rate_upper(dv / du);
            knots[static_cast<std::size_t>(k - 1)] =
                t_prefix[static_cast<std::size_t>(j1)] / n;
          }
          double shrink = stilde <= cfg.a ? 1.0 : (can_shrink ? cfg.a / stilde : 0.0);
          double ubv = 0.0;
          for (long long jj = 0; jj <= n; ++jj) {
            double u = static_cast<double>(jj) / n;
            double t = u * mseg;
            int kk = std::min(static_cast<int>(t), mseg - 1);
            double frac = t - kk;
            double left = kk == 0 ? 0.0 : knots[static_cast<std::size_t>(kk - 1)];
            double eta = left + frac * (knots[static_cast<std::size_t>(kk)] - left);
            ubv = std::max(ubv, std::abs(t_prefix[static_cast<std::size_t>(jj)] / n -
                                         shrink * eta));
          }
          if (ubv < cfg.delta) continue;
          StepCurve v;
          v.grid = static_cast<int>(n);
          v.dim = 1;
          v.values.resize(static_cast<std::size_t>(n) + 1);
          for (long long jj = 0; jj <= n; ++jj)
            v.values[static_cast<std::size_t>(jj)] =
                t_prefix[static_cast<std::size_t>(jj)] / n;
          v.values[0] = 0.0;
          ++dp_solves[w];
          if (dist_to_level_set(ev, v, cfg.a, dp) >= cfg.delta) ++q_hits[w];
        }
      });
      long long ph = 0, qh = 0, ds = 0;
      for (int w = 0; w < threads; ++w) {
        ph += p_hits[static_cast<std::size_t>(w)];
        qh += q_hits[static_cast<std::size_t>(w)];
        ds += dp_solves[static_cast<std::size_t>(w)];
      }
      double p_hat = static_cast<double>(ph) / static_cast<double>(rep);
      double q_hat = static_cast<double>(qh) / static_cast<double>(rep);
      BinomialBand pband = binomial_band(ph, rep, 1e-3);
      BinomialBand qband = binomial_band(qh, rep, 1e-3);
      double lower_lhs = ph > 0 ? -std::log(p_hat) / n : kInf;
      double upper_lhs = qh > 0 ? std::log(q_hat) / n : -kInf;
      bool lower_ok = ph > 0 && lower_lhs <= lower_rhs;
      bool upper_ok = q_hat <= std::exp(-static_cast<double>(n) * upper_rhs) + 1e-15;
      recs.push_back({{"n", n},
                      {"seed", seed},
                      {"replicas", rep},
                      {"s_gamma", s_gamma},
                      {"p_hat", p_hat},
                      {"p_lo", pband.lo},
                      {"p_hi", pband.hi},
                      {"q_hat", q_hat},
                      {"q_lo", qband.lo},
                      {"q_hi", qband.hi},
                      {"lower_lhs", json_num(lower_lhs)},
                      {"lower_rhs", lower_rhs},
                      {"lower_ok", lower_ok},
                      {"upper_lhs", json_num(upper_lhs)},
                      {"upper_rhs", -upper_rhs},
                      {"upper_ok", upper_ok},
                      {"zero_hits_p", ph == 0},
                      {"zero_hits_q", qh == 0},
                      {"dp_solves", ds}});
    }
  }

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo},
                     {"n_schedule", cfg.n_schedule},
                     {"a", cfg.a},
                     {"delta", cfg.delta},
                     {"lambda", cfg.lambda},
                     {"bound_d", ev.bound()},
                     {"band_tail", 1e-3},
                     {"master_seed", master}};
  report.records = recs;
  report.csv_columns = {"n",      "seed",      "replicas",  "s_gamma",
                        "p_hat",  "p_lo",      "p_hi",      "q_hat",
                        "q_lo",   "q_hi",      "lower_lhs", "lower_rhs",
                        "lower_ok", "upper_lhs", "upper_rhs", "upper_ok",
                        "zero_hits_p", "zero_hits_q", "dp_solves"};
  return report;
}

// ---------------------------------------------------------------------------
// lemma 3.1 diagnostic

RunReport run_lemma31(const ExperimentConfig& cfg, const RunOptions&) {
  TransitionModel model = build_model(cfg.model_spec);
  BlockFunction h = block_function(cfg.h_name);

  std::vector<nlohmann::json> recs;
  bool all_hold = true;
  for (int gap : cfg.gaps) {
    Lemma31Layout layout;
    layout.length = cfg.block_length;
    long long offset = 1;
    for (int i = 0; i < cfg.blocks_k; ++i) {
      layout.offsets.push_back(offset);
      offset += cfg.block_length - 1 + gap + 1;
    }
    Lemma31Result res = lemma31_check(model, layout, h);
    bool holds = res.exact_diff <= res.bound + 1e-15;
    all_hold = all_hold && holds;
    recs.push_back({{"k", cfg.blocks_k},
                    {"length", cfg.block_length},
                    {"gap", gap},
                    {"h", cfg.h_name},
                    {"exact_diff", res.exact_diff},
                    {"bound", res.bound},
                    {"h_sup", res.h_sup},
                    {"holds", holds}});
  }

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo},
                     {"all_hold", all_hold},
                     {"psi_fit", psi_fit_json(model)}};
  report.records = recs;
  report.csv_columns = {"k",     "length",     "gap",  "h",
                        "exact_diff", "bound", "holds"};
  return report;
}

// ---------------------------------------------------------------------------
// simulate / rate

RunReport run_simulate(const ExperimentConfig& cfg, const RunOptions& opt) {
  TransitionModel model = build_model(cfg.model_spec);
  std::uint64_t master = opt.seed_override.value_or(cfg.master_seed);

  struct Task {
    long long n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (long long n : cfg.n_schedule)
    for (auto s : cfg.seeds) tasks.push_back({n, s});
  std::vector<nlohmann::json> recs(tasks.size());
  std::vector<std::pair<std::string, std::string>> artifacts(tasks.size());

  run_tasks(tasks.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    long long n = tasks[i].n;
    std::uint64_t seed = tasks[i].seed;
    std::uint64_t derived = task_seed(master, cfg.law, n, seed);
    PathSample path = sample_path(model, static_cast<std::size_t>(n), derived);
    std::vector<long long> counts(static_cast<std::size_t>(model.state_count()), 0);
    for (auto s : path.states) ++counts[s];
    nlohmann::json freq = nlohmann::json::array();
    for (long long cnt : counts)
      freq.push_back(static_cast<double>(cnt) / static_cast<double>(n));
    recs[i] = {{"n", n},
               {"seed", seed},
               {"derived_seed", derived},
               {"freq", freq},
               {"first_state", path.states.front()},
               {"last_state", path.states.back()}};
    if (cfg.emit_paths) {
      std::string body = "t,state\r\n";
      for (std::size_t t = 0; t < path.states.size(); ++t)
        body += std::to_string(t + 1) + "," + std::to_string(path.states[t]) +
                "\r\n";
      artifacts[i] = {"path_n" + std::to_string(n) + "_seed" +
                          std::to_string(seed) + ".csv",
                      std::move(body)};
    }
  });

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo},
                     {"n_schedule", cfg.n_schedule},
                     {"states", model.state_count()},
                     {"master_seed", master}};
  if (model.doeblin_kappa)
    report.resolved["doeblin_kappa"] = *model.doeblin_kappa;
  report.records = recs;
  report.csv_columns = {"n", "seed", "derived_seed", "freq"};
  for (auto& art : artifacts)
    if (!art.first.empty()) report.artifacts.push_back(std::move(art));
  return report;
}

RunReport run_rate_table(const ExperimentConfig& cfg, const RunOptions&) {
  ResolvedLaw r = resolve_law(cfg, true);
  RateEvaluator& ev = *r.evaluator;

  std::vector<nlohmann::json> recs;
  for (int i = 0; i < cfg.beta_grid_count; ++i) {
    double beta = cfg.beta_grid_min +
                  (cfg.beta_grid_max - cfg.beta_grid_min) * i /
                      (cfg.beta_grid_count - 1);
    double rate = ev.dim() == 1 ? ev.rate(beta) : kInf;
    if (ev.dim() > 1) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(ev.dim());
      b(0) = beta;
      rate = ev.rate(b);
    }
    recs.push_back({{"beta", beta},
                    {"rate", json_num(rate)},
                    {"finite", std::isfinite(rate)}});
  }

  RunReport report;
  report.law = cfg.law;
  report.resolved = {{"config", cfg.echo}, {"bound_d", ev.bound()}};
  if (ev.dim() == 1) {
    RangeReport range = beta_range(ev);
    Eigen::VectorXd dir(1);
    dir << 1.0;
    report.resolved["beta_plus"] = range.beta_plus;
    report.resolved["beta_minus"] = range.beta_minus;
    report.resolved["beta_zero"] = range.beta_zero;
    report.resolved["sigma2"] = ev.sigma_squared(dir);
  }
  report.records = recs;
  report.csv_columns = {"beta", "rate", "finite"};
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------

Lemma31Result lemma31_check(const TransitionModel& model,
                            const Lemma31Layout& layout, const BlockFunction& h,
                            long long state_cap) {
  const int k = static_cast<int>(layout.offsets.size());
  const int len = layout.length;
  if (k < 1 || len < 1) throw ValidationError("empty block layout");
  for (int i = 1; i < k; ++i)
    if (layout.offsets[i] <= layout.offsets[i - 1] + len - 1)
      throw ValidationError("blocks must be separated by positive gaps");

  const int s = model.state_count();
  long long total = 1;
  for (int i = 0; i < k * len; ++i) {
    total *= s;
    if (total > state_cap)
      throw SizeCapExceeded("joint-law enumeration exceeds the state cap");
  }

  // Gap transition powers P^{m_i - n_{i-1}}.
  std::vector<Eigen::MatrixXd> gap_pow(static_cast<std::size_t>(k));
  std::vector<int> gaps(static_cast<std::size_t>(k), 0);
  for (int i = 1; i < k; ++i) {
    int g = static_cast<int>(layout.offsets[i] -
                             (layout.offsets[i - 1] + len - 1));
    gaps[static_cast<std::size_t>(i)] = g;
    Eigen::MatrixXd pg = model.kernel;
    for (int e = 1; e < g; ++e) pg = pg * model.kernel;
    gap_pow[static_cast<std::size_t>(i)] = pg;
  }

  double coupled = 0.0, decoupled = 0.0, h_sup = 0.0;
  std::vector<std::vector<int>> blocks(static_cast<std::size_t>(k),
                                       std::vector<int>(len, 0));
  std::vector<int> digits(static_cast<std::size_t>(k * len), 0);
  while (true) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < len; ++j)
        blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            digits[static_cast<std::size_t>(i * len + j)];
    // Within-block chain probabilities and the block product law.
    double joint = model.stationary(blocks[0][0]);
    double prod = 1.0;
    for (int i = 0; i < k; ++i) {
      double marg = model.stationary(blocks[static_cast<std::size_t>(i)][0]);
      for (int j = 1; j < len; ++j) {
        double step = model.kernel(blocks[static_cast<std::size_t>(i)][j - 1],
                                   blocks[static_cast<std::size_t>(i)][j]);
        marg *= step;
        joint *= step;
      }
      prod *= marg;
      if (i > 0)
        joint *= gap_pow[static_cast<std::size_t>(i)](
            blocks[static_cast<std::size_t>(i - 1)][len - 1],
            blocks[static_cast<std::size_t>(i)][0]);
    }
    double hv = h(blocks);
    h_sup = std::max(h_sup, std::abs(hv));
    coupled += hv * joint;
    decoupled += hv * prod;

    int d = 0;
    while (d < k * len && ++digits[static_cast<std::size_t>(d)] == s)
      digits[static_cast<std::size_t>(d++)] = 0;
    if (d == k * len) break;
  }

  Lemma31Result out;
  out.exact_diff = std::abs(coupled - decoupled);
  out.h_sup = h_sup;
  out.bound = 0.0;
  for (int i = 1; i < k; ++i)
    out.bound += h_sup * psi_coefficient(model, gaps[static_cast<std::size_t>(i)]);
  return out;
}

BlockFunction block_function(const std::string& name) {
  if (name == "constant")
    return [](const std::vector<std::vector<int>>&) { return 1.0; };
  if (name == "all-equal")
    return [](const std::vector<std::vector<int>>& blocks) {
      for (std::size_t i = 1; i < blocks.size(); ++i)
        if (blocks[i] != blocks[0]) return 0.0;
      return 1.0;
    };
  if (name == "first-equals-last")
    return [](const std::vector<std::vector<int>>& blocks) {
      return blocks.front() == blocks.back() ? 1.0 : 0.0;
    };
  if (name == "all-zero")
    return [](const std::vector<std::vector<int>>& blocks) {
      for (const auto& b : blocks)
        for (int x : b)
          if (x != 0) return 0.0;
      return 1.0;
    };
  throw ValidationError("unknown block function '" + name + "'");
}

BinomialBand binomial_band(long long hits, long long trials, double tail) {
  if (trials < 1) throw ValidationError("binomial band needs trials >= 1");
  if (hits < 0 || hits > trials)
    throw ValidationError("hits out of range");

  // log P(X <= k) under Bin(trials, p).
  auto log_cdf = [&](long long k, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return k >= trials ? 0.0 : -kInf;
    double lp = std::log(p), lq = std::log1p(-p);
    double best = -kInf;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(k) + 1);
    for (long long i = 0; i <= k; ++i) {
      double t = std::lgamma(trials + 1.0) - std::lgamma(i + 1.0) -
                 std::lgamma(trials - i + 1.0) + i * lp + (trials - i) * lq;
      terms.push_back(t);
      best = std::max(best, t);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
  };

  BinomialBand band;
  double lt = std::log(tail);
  if (hits == trials)
    band.hi = 1.0;
  else {
    double lo = static_cast<double>(hits) / trials, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (log_cdf(hits, mid) > lt ? lo : hi) = mid;
    }
    band.hi = hi;
  }
  if (hits == 0)
    band.lo = 0.0;
  else {
    double lo = 0.0, hi = static_cast<double>(hits) / trials;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      // P(X >= hits) = 1 - P(X <= hits-1) <= tail  <=>  cdf large
      double lcdf = log_cdf(hits - 1, mid);
      double tail_ge = -std::expm1(lcdf);  // 1 - cdf
      (tail_ge < tail ? lo : hi) = mid;
    }
    band.lo = lo;
  }
  return band;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NCLLN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.law == "scalar") return run_scalar(cfg, opt, false);
  if (cfg.law == "classical") return run_scalar(cfg, opt, true);
  if (cfg.law == "functional") return run_functional(cfg, opt);
  if (cfg.law == "ld-bounds") return run_ld_bounds(cfg, opt);
  if (cfg.law == "lemma31") return run_lemma31(cfg, opt);
  if (cfg.law == "simulate") return run_simulate(cfg, opt);
  if (cfg.law == "rate") return run_rate_table(cfg, opt);
  throw ValidationError("unknown law '" + cfg.law + "'");
}

}  // namespace nclln
