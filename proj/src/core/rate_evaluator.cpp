#include "core/rate_evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace nclln {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RateEvaluator::RateEvaluator(const TransitionModel& base, int ell,
                             Observable obs, long long size_cap)
    : product_(product_chain(base, ell, size_cap)), obs_(std::move(obs)) {
  if (obs_.base_states != base.state_count())
    throw ValidationError("observable base state count mismatch");
  if (obs_.ell != ell)
    throw ValidationError("observable arity does not match ell");
  if (obs_.table_rows() != product_.state_count())
    throw ValidationError("observable table does not cover the product states");
  pi_stat_ = product_.stationary;
  obs_ = with_mean(std::move(obs_), base.stationary);
}

double RateEvaluator::power_iteration_pi(const Eigen::VectorXd& alpha) const {
  const int s = product_.state_count();
  Eigen::VectorXd tilt(s);
  for (int y = 0; y < s; ++y)
    tilt(y) = std::exp(alpha.dot(obs_.table.row(y).transpose()));

  Eigen::VectorXd v = Eigen::VectorXd::Ones(s);
  const int cap = 100000;
  double lambda = 1.0;
  for (int it = 0; it < cap; ++it) {
    Eigen::VectorXd w = product_.kernel * tilt.cwiseProduct(v).matrix();
    double lo = kInf, hi = 0.0;
    for (int i = 0; i < s; ++i) {
      double r = w(i) / v(i);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    lambda = 0.5 * (lo + hi);
    v = w / w.maxCoeff();
    if (hi - lo <= 1e-13 * lambda) return std::log(lambda);
  }
  throw NonConvergence("tilted-operator power iteration exceeded its cap");
}

double RateEvaluator::log_mgf_rate(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != obs_.dim)
    throw ValidationError("alpha dimension mismatch");
  if (alpha.isZero(0.0)) return 0.0;  // spectral radius of a stochastic matrix

  std::vector<double> key(alpha.data(), alpha.data() + alpha.size());
  {
    std::shared_lock lock(pi_mutex_);
    auto it = pi_cache_.find(key);
    if (it != pi_cache_.end()) return it->second;
  }
  double value = power_iteration_pi(alpha);
  {
    std::unique_lock lock(pi_mutex_);
    pi_cache_.emplace(std::move(key), value);
  }
  return value;
}

double RateEvaluator::log_mgf_rate(double alpha) const {
  Eigen::VectorXd a(1);
  a(0) = alpha;
  return log_mgf_rate(a);
}

Eigen::VectorXd RateEvaluator::grad_pi(const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd g(alpha.size());
  for (int i = 0; i < alpha.size(); ++i) {
    Eigen::VectorXd hi = alpha, lo = alpha;
    hi(i) += kFdStep;
    lo(i) -= kFdStep;
    g(i) = (log_mgf_rate(hi) - log_mgf_rate(lo)) / (2 * kFdStep);
  }
  return g;
}

const RateEvaluator::Sweep& RateEvaluator::sweep() const {
  std::call_once(sweep_once_, [this] {
    if (obs_.dim != 1)
      throw DimensionNotScalar("conjugate sweep requires d = 1");
    auto sw = std::make_unique<Sweep>();
    std::vector<double> grid;
    grid.push_back(0.0);
    const int per_side = 700;
    const double a_min = 1e-3;
    const double growth = std::pow(kAlphaBox / a_min, 1.0 / (per_side - 1));
    double r = a_min;
    for (int i = 0; i < per_side; ++i) {
      grid.push_back(r);
      grid.push_back(-r);
      r = std::min(r * growth, kAlphaBox);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    sw->alphas = grid;
    sw->pis.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      sw->pis[i] = log_mgf_rate(grid[i]);
    sw->slopes.resize(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      sw->slopes[i] =
          (sw->pis[i + 1] - sw->pis[i]) / (sw->alphas[i + 1] - sw->alphas[i]);
    // Convexity can be violated only by eigenvalue tolerance noise; make the
    // chord-slope sequence monotone so bracket searches stay consistent.
    for (std::size_t i = 1; i < sw->slopes.size(); ++i)
      sw->slopes[i] = std::max(sw->slopes[i], sw->slopes[i - 1]);
    sweep_ = std::move(sw);
  });
  return *sweep_;
}

double RateEvaluator::golden_rate(double beta, double lo, double hi) const {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto g = [&](double a) { return a * beta - log_mgf_rate(a); };
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  while (hi - lo > 1e-10 * (1.0 + std::abs(hi) + std::abs(lo))) {
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
  return std::max(f1, f2);
}

double RateEvaluator::rate_scalar_impl(double beta) const {
  if (std::abs(beta) > obs_.bound_D) return kInf;
  const Sweep& sw = sweep();
  const auto& s = sw.slopes;
  // Outside the achieved slope range, the ascent still grows at the box
  // boundary; declare infinity when the growth slope exceeds the tolerance.
  if (beta > s.back()) {
    if (beta - s.back() > kGrowthSlopeTol) return kInf;
    return golden_rate(beta, sw.alphas[sw.alphas.size() - 2], sw.alphas.back());
  }
  if (beta < s.front()) {
    if (s.front() - beta > kGrowthSlopeTol) return kInf;
    return golden_rate(beta, sw.alphas.front(), sw.alphas[1]);
  }
  auto it = std::lower_bound(s.begin(), s.end(), beta);
  std::size_t k = static_cast<std::size_t>(it - s.begin());
  std::size_t lo_idx = k > 0 ? k - 1 : 0;
  std::size_t hi_idx = std::min(k + 1, sw.alphas.size() - 1);
  return std::max(0.0, golden_rate(beta, sw.alphas[lo_idx], sw.alphas[hi_idx]));
}

double RateEvaluator::rate(double beta) const {
  {
    std::shared_lock lock(rate_mutex_);
    auto it = rate_cache_.find(beta);
    if (it != rate_cache_.end()) return it->second;
  }
  double value = rate_scalar_impl(beta);
  {
    std::unique_lock lock(rate_mutex_);
    rate_cache_.emplace(beta, value);
  }
  return value;
}

double RateEvaluator::rate(const Eigen::VectorXd& beta) const {
  if (beta.size() != obs_.dim)
    throw ValidationError("beta dimension mismatch");
  if (obs_.dim == 1) return rate(beta(0));
  if (beta.norm() > obs_.bound_D) return kInf;
  return rate_ascent(beta);
}

double RateEvaluator::rate_ascent(const Eigen::VectorXd& beta) const {
  const int d = obs_.dim;
  auto objective = [&](const Eigen::VectorXd& a) {
    return a.dot(beta) - log_mgf_rate(a);
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(d));
  for (double radius : {1.0, 10.0}) {
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      e(i) = radius;
      starts.push_back(e);
      starts.push_back(-e);
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, radius / std::sqrt(d));
    starts.push_back(diag);
    starts.push_back(-diag);
  }

  double best = 0.0;
  bool diverged = false;
  for (const auto& start : starts) {
    Eigen::VectorXd a = start;
    double f = objective(a);
    for (int it = 0; it < 300; ++it) {
      Eigen::VectorXd grad = beta - grad_pi(a);
      double gn = grad.norm();
      if (gn <= 1e-8 * (1.0 + beta.norm())) break;
      double t = 1.0;
      Eigen::VectorXd cand;
      double fc;
      while (true) {
        cand = a + t * grad;
        if (cand.norm() > kAlphaBox) cand *= kAlphaBox / cand.norm();
        fc = objective(cand);
        if (fc >= f + 0.3 * t * gn * gn * std::min(1.0, t) || t < 1e-12) break;
        t *= 0.5;
      }
      if (fc <= f + 1e-15 * (1.0 + std::abs(f))) break;
      a = cand;
      f = fc;
      if (a.norm() >= kAlphaBox - 1e-9) {
        Eigen::VectorXd dir = a / a.norm();
        double slope = (beta - grad_pi(a)).dot(dir);
        if (slope > kGrowthSlopeTol) {
          diverged = true;
        }
        break;
      }
    }
    best = std::max(best, f);
    if (diverged) return kInf;
  }
  return std::max(best, 0.0);
}

double RateEvaluator::rate_lower(double beta) const {
  if (std::abs(beta) > obs_.bound_D) return kInf;
  const Sweep& sw = sweep();
  const auto& s = sw.slopes;
  std::size_t k;
  if (beta <= s.front())
    k = 0;
  else if (beta >= s.back())
    k = s.size();
  else
    k = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), beta) -
                                 s.begin());
  double best = -kInf;
  std::size_t lo = k > 1 ? k - 1 : 0;
  std::size_t hi = std::min(k + 1, sw.alphas.size() - 1);
  for (std::size_t i = lo; i <= hi; ++i)
    best = std::max(best, sw.alphas[i] * beta - sw.pis[i]);
  return std::max(best, 0.0);
}

double RateEvaluator::rate_upper(double beta) const {
  const Sweep& sw = sweep();
  const auto& s = sw.slopes;
  if (beta > s.back() || beta < s.front()) return kInf;
  auto it = std::lower_bound(s.begin(), s.end(), beta);
  std::size_t k = static_cast<std::size_t>(it - s.begin());
  // Under-estimate Pi by the outward chord-slope lines through the bracket
  // knots; the conjugate of the under-estimator upper-bounds I. The sup over
  // a piecewise-linear under-estimator is attained at a breakpoint.
  std::size_t lo = k > 0 ? k - 1 : 0;
  std::size_t hi = std::min(k + 2, sw.alphas.size() - 1);
  double best = -kInf;
  for (std::size_t i = lo; i < hi; ++i) {
    double a0 = sw.alphas[i], a1 = sw.alphas[i + 1];
    double p0 = sw.pis[i], p1 = sw.pis[i + 1];
    double sl = i > 0 ? sw.slopes[i - 1] : sw.slopes[0];
    double sr = i + 1 < sw.slopes.size() ? sw.slopes[i + 1] : sw.slopes.back();
    // Lines l0: through (a0,p0) slope sl; l1: through (a1,p1) slope sr.
    best = std::max(best, a0 * beta - p0);
    best = std::max(best, a1 * beta - p1);
    if (sr > sl) {
      double cross = (p1 - p0 - sr * a1 + sl * a0) / (sl - sr);
      if (cross > a0 && cross < a1) {
        double pi_lo = p0 + sl * (cross - a0);
        best = std::max(best, cross * beta - pi_lo);
      }
    }
  }
  return std::max(best, 0.0);
}

double RateEvaluator::inverse_rate_pos(double t) const {
  const Sweep& sw = sweep();
  double mean = mean_slope()(0);
  if (t <= 0.0) return mean;
  double hi = std::min(obs_.bound_D, sw.slopes.back());
  if (rate_lower(hi) <= t) return hi;
  double lo = mean;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (rate_lower(mid) <= t)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double RateEvaluator::inverse_rate_neg(double t) const {
  const Sweep& sw = sweep();
  double mean = mean_slope()(0);
  if (t <= 0.0) return mean;
  double lo = std::max(-obs_.bound_D, sw.slopes.front());
  if (rate_lower(lo) <= t) return lo;
  double hi = mean;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (rate_lower(mid) <= t)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double RateEvaluator::action(const StepCurve& gamma) const {
  if (gamma.dim != obs_.dim)
    throw ValidationError("curve dimension does not match the evaluator");
  if (gamma.grid < 1) throw ValidationError("curve grid must be >= 1");
  double total = 0.0;
  Eigen::VectorXd slope(gamma.dim);
  for (int j = 1; j <= gamma.grid; ++j) {
    for (int c = 0; c < gamma.dim; ++c)
      slope(c) = gamma.grid * (gamma.at(j, c) - gamma.at(j - 1, c));
    double r = obs_.dim == 1 ? rate(slope(0)) : rate(slope);
    if (std::isinf(r)) return kInf;
    total += r;
  }
  return total / gamma.grid;
}

double RateEvaluator::sigma_squared(const Eigen::VectorXd& direction) const {
  if (direction.size() != obs_.dim)
    throw ValidationError("direction dimension mismatch");
  double norm = direction.norm();
  if (norm == 0.0) throw ValidationError("direction must be nonzero");
  Eigen::VectorXd dir = direction / norm;

  const int s = product_.state_count();
  Eigen::VectorXd g(s);
  for (int y = 0; y < s; ++y) g(y) = dir.dot(obs_.table.row(y).transpose());
  double mean = pi_stat_.dot(g);
  if (std::abs(mean) > 1e-9)
    throw ValidationError("sigma_squared requires a centered observable");
  g.array() -= mean;

  // x = sum_{k>=0} Q^k g solves (I - Q + 1 pi^T) x = g.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(s, s) - product_.kernel +
                      Eigen::VectorXd::Ones(s) * pi_stat_.transpose();
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(g);
  double var = pi_stat_.dot(g.cwiseProduct(g).matrix());
  double sigma2 = 2.0 * pi_stat_.dot(g.cwiseProduct(x).matrix()) - var;
  return sigma2;
}

Eigen::VectorXd RateEvaluator::mean_slope() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(obs_.dim);
  for (int y = 0; y < product_.state_count(); ++y)
    m += pi_stat_(y) * obs_.table.row(y).transpose();
  return m;
}

}  // namespace nclln
