#include "core/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "core/errors.hpp"

namespace nclln {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tube-feasibility DP over a shared position lattice of pitch q. Transition
// costs I(N * dp) are convex in the cell offset, so each (min,+) layer is a
// Monge matrix and the per-row argmins are monotone.
class TubeDp {
 public:
  TubeDp(const RateEvaluator& ev, const StepCurve& gamma, double q,
         long long cells_cap)
      : gamma_(gamma), q_(q), cells_cap_(cells_cap), n_(gamma.grid) {
    double d = ev.bound();
    dz_ = n_ * q_;
    k_half_ = static_cast<long long>(std::floor(d / dz_)) + 1;
    itab_.resize(2 * k_half_ + 1);
    for (long long k = -k_half_; k <= k_half_; ++k) {
      double z = static_cast<double>(k) * dz_;
      itab_[static_cast<std::size_t>(k + k_half_)] =
          std::abs(z) > d ? kInf : ev.rate(z);
    }
  }

  // Minimal total (sum over steps) rate of a lattice curve staying within
  // delta of gamma at every grid point; feasible iff <= a * N.
  double min_total_rate(double delta) const {
    auto cell_range = [&](int j) {
      double g = gamma_.at(j);
      long long lo = static_cast<long long>(std::ceil((g - delta) / q_ - 1e-12));
      long long hi = static_cast<long long>(std::floor((g + delta) / q_ + 1e-12));
      return std::pair<long long, long long>(lo, hi);
    };

    long long pl = 0, ph = 0;  // start pinned at the origin cell
    std::vector<double> prev{0.0};
    std::vector<double> cur;
    for (int j = 1; j <= n_; ++j) {
      auto [cl, ch] = cell_range(j);
      if (ch < cl) return kInf;
      if (ch - cl + 1 > cells_cap_)
        throw BadResolution("tube DP exceeds the per-step cell cap");
      cur.assign(static_cast<std::size_t>(ch - cl + 1), kInf);

      // Divide and conquer over rows; argmin columns are monotone.
      std::function<void(long long, long long, long long, long long)> rec =
          [&](long long r0, long long r1, long long c0, long long c1) {
            if (r0 > r1) return;
            long long rm = r0 + (r1 - r0) / 2;
            long long lo = std::max({c0, pl, rm - k_half_});
            long long hi = std::min({c1, ph, rm + k_half_});
            double best = kInf;
            long long bestc = std::min(std::max(rm, c0), c1);
            for (long long c = lo; c <= hi; ++c) {
              double base = prev[static_cast<std::size_t>(c - pl)];
              if (base == kInf) continue;
              double w = itab_[static_cast<std::size_t>(rm - c + k_half_)];
              if (w == kInf) continue;
              double val = base + w;
              if (val < best) {
                best = val;
                bestc = c;
              }
            }
            cur[static_cast<std::size_t>(rm - cl)] = best;
            rec(r0, rm - 1, c0, bestc);
            rec(rm + 1, r1, bestc, c1);
          };
      rec(cl, ch, pl, ph);
      prev.swap(cur);
      pl = cl;
      ph = ch;
    }
    double best = kInf;
    for (double v : prev) best = std::min(best, v);
    return best;
  }

 private:
  const StepCurve& gamma_;
  double q_;
  long long cells_cap_;
  int n_;
  double dz_ = 0.0;
  long long k_half_ = 0;
  std::vector<double> itab_;
};

}  // namespace

double dist_to_level_set(const RateEvaluator& evaluator, const StepCurve& gamma,
                         double a, const DistParams& params) {
  if (a <= 0.0) throw ValidationError("level-set budget a must be positive");
  if (gamma.dim != 1)
    throw ValidationError("dist_to_level_set supports scalar curves only");
  if (gamma.grid < 1) throw ValidationError("curve grid must be >= 1");
  if (gamma.values[0] != 0.0)
    throw ValidationError("curves must be anchored at 0");

  double d = evaluator.bound();
  double max_abs = 0.0;
  for (int j = 0; j <= gamma.grid; ++j)
    max_abs = std::max(max_abs, std::abs(gamma.at(j)));
  if (d == 0.0) return max_abs;  // Phi(a) collapses to the zero curve

  if (evaluator.action(gamma) <= a) return 0.0;

  double tube_tol = params.tube_tol > 0.0 ? params.tube_tol : 1e-3 * d;
  double q = std::min(tube_tol / 4.0, params.slope_granularity * d / gamma.grid);
  TubeDp dp(evaluator, gamma, q, params.cells_cap);
  double budget = a * gamma.grid * (1.0 + 1e-12) + 1e-12;
  auto feasible = [&](double delta) { return dp.min_total_rate(delta) <= budget; };

  double mean = evaluator.mean_slope()(0);
  double hi = q;
  for (int j = 0; j <= gamma.grid; ++j)
    hi = std::max(hi, std::abs(gamma.at(j) -
                               mean * static_cast<double>(j) / gamma.grid) + q);
  double hi_cap = max_abs + 2.0 * d + 1.0;
  while (!feasible(hi)) {
    hi = 2.0 * hi + tube_tol;
    if (hi > hi_cap)
      throw NumericError("no tube radius reaches the level set; a too small "
                         "for the quantization");
  }
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

StepCurve LevelSetNet::curve(long long i) const {
  StepCurve c = StepCurve::zero(segments, dim);
  const auto& pos = positions[static_cast<std::size_t>(i)];
  for (int j = 1; j <= segments; ++j)
    for (int comp = 0; comp < dim; ++comp)
      c.at(j, comp) = pos[static_cast<std::size_t>(j - 1) * dim + comp];
  return c;
}

LevelSetNet level_set_net(const RateEvaluator& evaluator, double a, double eps,
                          int segments, double pitch, long long enumeration_cap) {
  if (a <= 0.0 || eps <= 0.0 || segments < 1)
    throw ValidationError("level_set_net requires a > 0, eps > 0, M >= 1");
  int d = evaluator.dim();
  double bound = evaluator.bound();

  LevelSetNet net;
  net.a = a;
  net.eps = eps;
  net.segments = segments;
  net.dim = d;
  net.pitch = pitch > 0.0 ? pitch : segments * eps / 2.0;

  if (bound == 0.0) {  // degenerate observable: only the zero curve
    net.positions.push_back(std::vector<double>(
        static_cast<std::size_t>(segments) * d, 0.0));
    return net;
  }

  // Lattice slopes within the D-ball with finite rate contribution.
  long long per_axis = static_cast<long long>(std::floor(bound / net.pitch));
  std::vector<Eigen::VectorXd> slopes;
  std::vector<double> slope_rate;
  {
    std::vector<long long> idx(d, -per_axis);
    while (true) {
      Eigen::VectorXd z(d);
      for (int c = 0; c < d; ++c) z(c) = idx[c] * net.pitch;
      if (z.norm() <= bound + 1e-12) {
        double r = d == 1 ? evaluator.rate(z(0)) : evaluator.rate(z);
        if (r <= segments * a + 1e-9) {
          slopes.push_back(z);
          slope_rate.push_back(r);
        }
      }
      int c = 0;
      while (c < d && ++idx[c] > per_axis) idx[c++] = -per_axis;
      if (c == d) break;
    }
  }

  // Depth-first enumeration with the running rate budget; leaves are
  // deduplicated into position cells of side eps/(2 sqrt(d)) (same cell
  // implies sup distance <= eps/2), then greedily pruned at radius eps/2.
  double cell = eps / (2.0 * std::sqrt(static_cast<double>(d)));
  struct Leaf {
    std::vector<double> pos;
    std::vector<long long> key;
  };
  std::vector<Leaf> kept;
  std::unordered_map<std::string, char> cells_seen;
  long long nodes = 0;

  std::vector<int> choice(segments, 0);
  std::vector<double> partial(segments + 1, 0.0);
  std::function<void(int)> rec = [&](int depth) {
    if (++nodes > enumeration_cap)
      throw NetExplosion("net enumeration exceeded the cap of " +
                         std::to_string(enumeration_cap) + " nodes");
    if (depth == segments) {
      Leaf leaf;
      leaf.pos.resize(static_cast<std::size_t>(segments) * d);
      Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
      leaf.key.resize(static_cast<std::size_t>(segments) * d);
      for (int j = 0; j < segments; ++j) {
        p += slopes[static_cast<std::size_t>(choice[j])] / segments;
        for (int c = 0; c < d; ++c) {
          leaf.pos[static_cast<std::size_t>(j) * d + c] = p(c);
          leaf.key[static_cast<std::size_t>(j) * d + c] =
              static_cast<long long>(std::llround(p(c) / cell));
        }
      }
      std::string key(reinterpret_cast<const char*>(leaf.key.data()),
                      leaf.key.size() * sizeof(long long));
      if (cells_seen.emplace(std::move(key), 1).second)
        kept.push_back(std::move(leaf));
      return;
    }
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      double acc = partial[depth] + slope_rate[i];
      if (acc > segments * a + 1e-9) continue;
      choice[depth] = static_cast<int>(i);
      partial[depth + 1] = acc;
      rec(depth + 1);
    }
  };
  rec(0);

  // Greedy radius prune via a spatial hash: buckets of side eps (two fine
  // cells); curves within eps/2 of each other land in adjacent buckets.
  // Scalar curves only; higher dimensions keep the cell dedupe.
  if (d == 1) {
    auto bucket_of = [](long long fine) {
      return fine >= 0 ? fine / 2 : (fine - 1) / 2;
    };
    auto hash_of = [&](const std::vector<long long>& idx) {
      std::uint64_t h = 14695981039346656037ull;
      for (long long v : idx) {
        auto u = static_cast<std::uint64_t>(v);
        for (int byte = 0; byte < 8; ++byte) {
          h ^= (u >> (8 * byte)) & 0xff;
          h *= 1099511628211ull;
        }
      }
      return h;
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    std::vector<std::size_t> reps;
    std::vector<long long> probe(static_cast<std::size_t>(segments));
    for (std::size_t li = 0; li < kept.size(); ++li) {
      const Leaf& leaf = kept[li];
      bool covered = false;
      std::function<bool(int)> scan = [&](int j) -> bool {
        if (j == segments) {
          auto it = buckets.find(hash_of(probe));
          if (it == buckets.end()) return false;
          for (std::size_t ri : it->second) {
            double worst = 0.0;
            for (int k = 0; k < segments; ++k)
              worst = std::max(worst, std::abs(kept[ri].pos[k] - leaf.pos[k]));
            if (worst <= eps / 2.0) return true;
          }
          return false;
        }
        long long center = bucket_of(leaf.key[static_cast<std::size_t>(j)]);
        for (long long dlt : {0ll, -1ll, 1ll}) {
          probe[static_cast<std::size_t>(j)] = center + dlt;
          if (scan(j + 1)) return true;
        }
        return false;
      };
      covered = scan(0);
      if (!covered) {
        for (int k = 0; k < segments; ++k)
          probe[static_cast<std::size_t>(k)] =
              bucket_of(leaf.key[static_cast<std::size_t>(k)]);
        buckets[hash_of(probe)].push_back(li);
        reps.push_back(li);
      }
    }
    for (std::size_t ri : reps) net.positions.push_back(kept[ri].pos);
    return net;
  }

  for (auto& leaf : kept) net.positions.push_back(std::move(leaf.pos));
  return net;
}

namespace {

// Quantizes prefix-sum increments back onto the observable's value set so
// window actions hit the rate cache instead of spawning near-duplicate keys.
std::vector<double> window_rate_prefix(const CurveFamily& w,
                                       const RateEvaluator& ev) {
  std::vector<double> values;
  for (long long r = 0; r < ev.observable().table_rows(); ++r)
    values.push_back(ev.observable().table(r, 0));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> value_rate(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    value_rate[i] = ev.rate(values[i]);

  std::vector<double> out(static_cast<std::size_t>(w.n) + 1, 0.0);
  for (long long i = 1; i <= w.n; ++i) {
    double inc = w.prefix->at(i) - w.prefix->at(i - 1);
    auto it = std::lower_bound(values.begin(), values.end(), inc);
    double best = kInf;
    double rate = kInf;
    for (auto probe : {it, it == values.begin() ? it : std::prev(it)}) {
      if (probe == values.end()) continue;
      double gap = std::abs(*probe - inc);
      if (gap < best) {
        best = gap;
        rate = value_rate[static_cast<std::size_t>(probe - values.begin())];
      }
    }
    if (best > 1e-6 * (1.0 + std::abs(inc))) rate = ev.rate(inc);
    out[static_cast<std::size_t>(i)] =
        out[static_cast<std::size_t>(i - 1)] + rate;
  }
  return out;
}

double curve_grid_value(const std::vector<double>& knot_pos, int segments,
                        int j, int b) {
  // Piecewise-linear value at u = j/b for knots at k/segments.
  double u = static_cast<double>(j) / b;
  double t = u * segments;
  int k = std::min(static_cast<int>(t), segments - 1);
  double frac = t - k;
  double left = k == 0 ? 0.0 : knot_pos[static_cast<std::size_t>(k - 1)];
  double right = knot_pos[static_cast<std::size_t>(k)];
  return left + frac * (right - left);
}

}  // namespace

double hausdorff_distance(const CurveFamily& w, const LevelSetNet& net,
                          const RateEvaluator& evaluator, double a,
                          const HausdorffParams& params,
                          HausdorffBreakdown* breakdown) {
  if (w.count() < 1) throw ValidationError("window family is empty");
  if (net.count() < 1) throw ValidationError("level-set net is empty");
  if (w.dim() != 1 || net.dim != 1)
    throw ValidationError("hausdorff_distance supports scalar curves only");

  const int b = w.b;
  const long long count = w.count();
  const double d_bound = evaluator.bound();
  HausdorffBreakdown stats;

  // ---- First direction: sup over windows of the distance to Phi(a).
  std::vector<double> rate_prefix = window_rate_prefix(w, evaluator);
  auto window_action = [&](long long m) {
    return (rate_prefix[static_cast<std::size_t>(m + b)] -
            rate_prefix[static_cast<std::size_t>(m)]) /
           b;
  };

  // Certified per-lag reach of Phi(a) members over sub-intervals.
  std::vector<int> lags;
  for (int f : {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233})
    if (f < b) lags.push_back(f);
  lags.push_back(b);
  std::vector<double> env(lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    double du = static_cast<double>(lags[i]) / b;
    double t = a / du;
    double reach = std::max(std::abs(evaluator.inverse_rate_pos(t)),
                            std::abs(evaluator.inverse_rate_neg(t)));
    env[i] = du * std::min(reach, d_bound);
  }

  std::vector<double> lb(static_cast<std::size_t>(count), 0.0);
  {
    const PrefixSums& p = *w.prefix;
    for (std::size_t li = 0; li < lags.size(); ++li) {
      int lag = lags[li];
      // Sliding max of |Sigma_{i+lag} - Sigma_i| over i in [m, m+b-lag].
      std::deque<long long> dq;
      long long hi_i = -1;
      for (long long m = 0; m < count; ++m) {
        long long need_hi = m + b - lag;
        while (hi_i < need_hi) {
          ++hi_i;
          double v = std::abs(p.at(hi_i + lag) - p.at(hi_i));
          while (!dq.empty() &&
                 std::abs(p.at(dq.back() + lag) - p.at(dq.back())) <= v)
            dq.pop_back();
          dq.push_back(hi_i);
        }
        while (!dq.empty() && dq.front() < m) dq.pop_front();
        if (!dq.empty()) {
          double big = std::abs(p.at(dq.front() + lag) - p.at(dq.front())) / b;
          double cand = 0.5 * (big - env[li]);
          if (cand > lb[static_cast<std::size_t>(m)])
            lb[static_cast<std::size_t>(m)] = cand;
        }
      }
    }
  }

  // Cheap certified upper bound: project onto a coarse piecewise-linear
  // curve and shrink it into the budget (valid for centered evaluators).
  const int mseg = std::min(params.coarse_segments, b);
  const bool can_shrink = evaluator.rate_upper(0.0) <= 1e-12;
  std::vector<int> knots(static_cast<std::size_t>(mseg) + 1);
  for (int k = 0; k <= mseg; ++k)
    knots[static_cast<std::size_t>(k)] =
        static_cast<int>(std::llround(static_cast<double>(k) * b / mseg));
  double mean = evaluator.mean_slope()(0);

  std::vector<double> ub(static_cast<std::size_t>(count));
  std::vector<double> knot_pos(static_cast<std::size_t>(mseg));
  for (long long m = 0; m < count; ++m) {
    if (window_action(m) <= a) {
      ub[static_cast<std::size_t>(m)] = 0.0;
      lb[static_cast<std::size_t>(m)] = 0.0;
      ++stats.windows_pruned_by_action;
      continue;
    }
    double stilde = 0.0;
    for (int k = 1; k <= mseg; ++k) {
      double du = static_cast<double>(knots[k] - knots[k - 1]) / b;
      double dv = w.value(m, knots[k]) - w.value(m, knots[k - 1]);
      stilde += du * evaluator.rate_upper(dv / du);
      knot_pos[static_cast<std::size_t>(k - 1)] = w.value(m, knots[k]);
    }
    double shrink = 1.0;
    if (stilde > a) {
      if (can_shrink)
        shrink = a / stilde;
      else
        shrink = 0.0;  // fall back to the mean line
    }
    double worst = 0.0;
    for (int j = 0; j <= b; ++j) {
      double eta = shrink == 0.0
                       ? mean * static_cast<double>(j) / b
                       : shrink * curve_grid_value(knot_pos, mseg, j, b);
      worst = std::max(worst, std::abs(w.value(m, j) - eta));
    }
    ub[static_cast<std::size_t>(m)] = worst;
  }

  double first = 0.0;
  for (long long m = 0; m < count; ++m)
    first = std::max(first, lb[static_cast<std::size_t>(m)]);

  std::vector<long long> order;
  order.reserve(static_cast<std::size_t>(count));
  for (long long m = 0; m < count; ++m)
    if (ub[static_cast<std::size_t>(m)] > 0.0) order.push_back(m);
  std::sort(order.begin(), order.end(), [&](long long x, long long y) {
    double ux = ub[static_cast<std::size_t>(x)];
    double uy = ub[static_cast<std::size_t>(y)];
    if (ux != uy) return ux > uy;
    return x < y;
  });
  for (long long m : order) {
    if (ub[static_cast<std::size_t>(m)] <= first) break;
    StepCurve gamma = w.curve(m);
    double dist = dist_to_level_set(evaluator, gamma, a, params.dist);
    ++stats.dp_solves;
    first = std::max(first, dist);
  }
  stats.first_direction = first;

  // ---- Second direction: sup over net members of the min distance to W.
  const int segs = net.segments;
  std::vector<int> ck(static_cast<std::size_t>(segs) + 1);
  for (int k = 0; k <= segs; ++k)
    ck[static_cast<std::size_t>(k)] =
        static_cast<int>(std::llround(static_cast<double>(k) * b / segs));

  // Net member values on the window grid and at the checkpoints.
  const long long nets = net.count();
  std::vector<std::vector<double>> eta_grid(static_cast<std::size_t>(nets));
  std::vector<std::vector<double>> eta_ck(static_cast<std::size_t>(nets));
  std::vector<long long> net_order(static_cast<std::size_t>(nets));
  for (long long i = 0; i < nets; ++i) {
    const auto& pos = net.positions[static_cast<std::size_t>(i)];
    auto& grid = eta_grid[static_cast<std::size_t>(i)];
    grid.resize(static_cast<std::size_t>(b) + 1);
    for (int j = 0; j <= b; ++j) grid[j] = curve_grid_value(pos, segs, j, b);
    auto& ckv = eta_ck[static_cast<std::size_t>(i)];
    ckv.resize(static_cast<std::size_t>(segs) + 1);
    for (int k = 0; k <= segs; ++k) ckv[k] = grid[ck[k]];
    net_order[static_cast<std::size_t>(i)] = i;
  }
  std::sort(net_order.begin(), net_order.end(), [&](long long x, long long y) {
    double ex = std::abs(eta_grid[static_cast<std::size_t>(x)].back());
    double ey = std::abs(eta_grid[static_cast<std::size_t>(y)].back());
    if (ex != ey) return ex > ey;
    return x < y;
  });

  const PrefixSums& p = *w.prefix;
  auto check_sup = [&](long long i, long long m, double stop_at) {
    const auto& ckv = eta_ck[static_cast<std::size_t>(i)];
    double base = p.at(m);
    double worst = 0.0;
    for (int k = 1; k <= segs; ++k) {
      double v = (p.at(m + ck[k]) - base) / b;
      worst = std::max(worst, std::abs(v - ckv[k]));
      if (worst >= stop_at) return worst;
    }
    return worst;
  };
  auto full_sup = [&](long long i, long long m, double stop_at) {
    const auto& grid = eta_grid[static_cast<std::size_t>(i)];
    double base = p.at(m);
    double worst = 0.0;
    for (int j = 1; j <= b; ++j) {
      double v = (p.at(m + j) - base) / b;
      worst = std::max(worst, std::abs(v - grid[j]));
      if (worst >= stop_at) return worst;
    }
    return worst;
  };

  double second = 0.0;
  for (long long oi = 0; oi < nets; ++oi) {
    long long i = net_order[static_cast<std::size_t>(oi)];
    double best_ck = kInf;
    long long best_m = 0;
    for (long long m = 0; m < count; ++m) {
      double v = check_sup(i, m, best_ck);
      if (v < best_ck) {
        best_ck = v;
        best_m = m;
      }
    }
    double cur = full_sup(i, best_m, kInf);
    if (cur <= second) continue;
    // Exact min over the family, pruning by the checkpoint lower bound and
    // abandoning once the min cannot exceed the running max.
    for (long long m = 0; m < count && cur > second; ++m) {
      if (m == best_m) continue;
      if (check_sup(i, m, cur) >= cur) continue;
      double v = full_sup(i, m, cur);
      if (v < cur) cur = v;
    }
    second = std::max(second, cur);
  }
  stats.second_direction = second;

  if (breakdown) *breakdown = stats;
  return std::max(first, second);
}

std::string level_set_net_to_csv(const LevelSetNet& net) {
  std::ostringstream os;
  os.precision(17);
  os << "# a=" << net.a << ",eps=" << net.eps << ",M=" << net.segments
     << ",pitch=" << net.pitch << ",d=" << net.dim << "\r\n";
  os << "m,j";
  for (int c = 0; c < net.dim; ++c) os << ",value_" << c;
  os << "\r\n";
  for (long long i = 0; i < net.count(); ++i) {
    const auto& pos = net.positions[static_cast<std::size_t>(i)];
    for (int j = 0; j <= net.segments; ++j) {
      os << i << "," << j;
      for (int c = 0; c < net.dim; ++c) {
        double v = j == 0 ? 0.0 : pos[static_cast<std::size_t>(j - 1) * net.dim + c];
        os << "," << v;
      }
      os << "\r\n";
    }
  }
  return os.str();
}

}  // namespace nclln
