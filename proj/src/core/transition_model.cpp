#include "core/transition_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "core/errors.hpp"
#include "json.hpp"

namespace nclln {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

void check_row_stochastic(const Eigen::MatrixXd& kernel) {
  if (kernel.rows() != kernel.cols() || kernel.rows() < 1)
    throw ValidationError("kernel must be square and nonempty");
  for (int i = 0; i < kernel.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < kernel.cols(); ++j) {
      if (kernel(i, j) < 0.0)
        throw ValidationError("kernel entries must be nonnegative");
      s += kernel(i, j);
    }
    if (std::abs(s - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os << "kernel row " << i << " sums to " << s << ", not 1";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

void TransitionModel::validate() const {
  check_row_stochastic(kernel);
  int s = state_count();
  if (stationary.size() != s)
    throw ValidationError("stationary vector size mismatch");
  double total = 0.0;
  for (int i = 0; i < s; ++i) {
    if (stationary(i) < 0.0)
      throw ValidationError("stationary entries must be nonnegative");
    total += stationary(i);
  }
  if (std::abs(total - 1.0) > kStationaryTol)
    throw ValidationError("stationary vector does not sum to 1");
  Eigen::VectorXd lhs = kernel.transpose() * stationary;
  for (int i = 0; i < s; ++i) {
    if (std::abs(lhs(i) - stationary(i)) > kStationaryTol)
      throw ValidationError("stationary vector is not invariant under kernel");
  }
  if (doeblin_kappa) {
    double k = *doeblin_kappa;
    if (!(k > 0.0 && k <= 1.0))
      throw ValidationError("doeblin_kappa must lie in (0,1]");
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        double lo = k * stationary(j);
        double hi = stationary(j) / k;
        if (kernel(i, j) < lo - 1e-12 || kernel(i, j) > hi + 1e-12)
          throw ValidationError("Doeblin sandwich violated by stored kappa");
      }
  }
}

double validate_doeblin(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu) {
  check_row_stochastic(kernel);
  if (mu.size() != kernel.rows())
    throw ValidationError("mu size mismatch");
  if ((mu.array() <= 0.0).any())
    throw ValidationError("mu must be strictly positive");
  double kappa = 1.0;
  for (int i = 0; i < kernel.rows(); ++i)
    for (int j = 0; j < kernel.cols(); ++j) {
      if (kernel(i, j) == 0.0)
        throw DoeblinViolated("kernel has a zero entry; no positive kappa exists");
      double r = kernel(i, j) / mu(j);
      kappa = std::min(kappa, std::min(r, 1.0 / r));
    }
  return kappa;
}

namespace {

// Strong connectivity plus aperiodicity. Reachability via forward/backward
// BFS; the period is the gcd of (level(u) + 1 - level(v)) over edges of the
// strongly connected support graph.
bool primitive_impl(const Eigen::MatrixXd& kernel) {
  int s = static_cast<int>(kernel.rows());
  auto bfs = [&](bool forward) {
    std::vector<char> seen(s, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v = 0; v < s; ++v) {
        double w = forward ? kernel(u, v) : kernel(v, u);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    return seen;
  };
  auto fwd = bfs(true);
  auto bwd = bfs(false);
  for (int v = 0; v < s; ++v)
    if (!fwd[v] || !bwd[v]) return false;

  std::vector<int> level(s, -1);
  std::queue<int> q;
  q.push(0);
  level[0] = 0;
  long long g = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v = 0; v < s; ++v) {
      if (kernel(u, v) <= 0.0) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        q.push(v);
      } else {
        g = std::gcd(g, static_cast<long long>(level[u] + 1 - level[v]));
      }
    }
  }
  return g == 1;
}

}  // namespace

bool is_primitive(const Eigen::MatrixXd& kernel) { return primitive_impl(kernel); }

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel) {
  check_row_stochastic(kernel);
  if (!primitive_impl(kernel))
    throw NotPrimitive("kernel is not primitive (reducible or periodic)");
  int s = static_cast<int>(kernel.rows());
  // Solve mu (P - I) = 0 with the normalization sum(mu) = 1 appended.
  Eigen::MatrixXd a(s + 1, s);
  a.topRows(s) = kernel.transpose() - Eigen::MatrixXd::Identity(s, s);
  a.row(s).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s + 1);
  b(s) = 1.0;
  Eigen::VectorXd mu = a.colPivHouseholderQr().solve(b);
  if ((mu.array() <= 0.0).any())
    throw NumericError("stationary solve produced a nonpositive entry");
  mu /= mu.sum();
  return mu;
}

double psi_coefficient(const TransitionModel& model, int n) {
  if (n < 1) throw ValidationError("psi coefficient requires n >= 1");
  const Eigen::MatrixXd& p = model.kernel;
  Eigen::MatrixXd pn = p;
  for (int i = 1; i < n; ++i) pn = pn * p;
  double worst = 0.0;
  for (int x = 0; x < model.state_count(); ++x)
    for (int y = 0; y < model.state_count(); ++y)
      worst = std::max(worst, std::abs(pn(x, y) / model.stationary(y) - 1.0));
  return worst;
}

MixingProfile mixing_profile(const TransitionModel& model, int max_n) {
  if (max_n < 1) throw ValidationError("mixing profile requires max_n >= 1");
  MixingProfile out;
  out.psi.reserve(max_n);
  Eigen::MatrixXd pn = Eigen::MatrixXd::Identity(model.state_count(), model.state_count());
  for (int n = 1; n <= max_n; ++n) {
    pn = pn * model.kernel;
    double worst = 0.0;
    for (int x = 0; x < model.state_count(); ++x)
      for (int y = 0; y < model.state_count(); ++y)
        worst = std::max(worst, std::abs(pn(x, y) / model.stationary(y) - 1.0));
    out.psi.push_back(worst);
  }
  // Least squares of ln psi(n) against n over the strictly positive entries.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int n = 1; n <= max_n; ++n) {
    double v = out.psi[n - 1];
    if (v <= 0.0) break;
    double x = n, y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    double intercept = (sy - slope * sx) / cnt;
    out.fitted_rate = -slope;
    out.fitted_prefactor = std::exp(intercept);
  }
  return out;
}

GibbsResult gibbs_markov(const Eigen::MatrixXi& adjacency,
                         const Eigen::MatrixXd& potential) {
  int s = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != s || potential.rows() != s || potential.cols() != s)
    throw ValidationError("adjacency/potential shape mismatch");
  Eigen::MatrixXd transfer(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      transfer(i, j) = adjacency(i, j) != 0 ? std::exp(potential(i, j)) : 0.0;
  if (!primitive_impl(transfer))
    throw NotPrimitive("adjacency is not primitive");

  // Power iteration for the Perron pair; Collatz-Wielandt brackets give a
  // certified relative tolerance.
  Eigen::VectorXd h = Eigen::VectorXd::Ones(s);
  double lambda = 0.0;
  const int cap = 100000;
  int it = 0;
  for (; it < cap; ++it) {
    Eigen::VectorXd hn = transfer * h;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < s; ++i) {
      double r = hn(i) / h(i);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    lambda = 0.5 * (lo + hi);
    h = hn / hn.maxCoeff();
    if (hi - lo <= 1e-13 * lambda) break;
  }
  if (it == cap) throw NonConvergence("Perron iteration did not converge");

  Eigen::MatrixXd kernel(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      kernel(i, j) = transfer(i, j) * h(j) / (lambda * h(i));
  // Remove the rounding residue so rows sum to 1 exactly within tolerance.
  for (int i = 0; i < s; ++i) kernel.row(i) /= kernel.row(i).sum();

  GibbsResult out;
  out.model.label = "gibbs";
  out.model.kernel = kernel;
  out.model.stationary = stationary_distribution(kernel);
  out.pressure = std::log(lambda);
  out.model.validate();
  return out;
}

std::vector<int> product_tuple(long long index, int base, int ell) {
  std::vector<int> tuple(ell);
  for (int i = ell - 1; i >= 0; --i) {
    tuple[i] = static_cast<int>(index % base);
    index /= base;
  }
  return tuple;
}

TransitionModel product_chain(const TransitionModel& model, int ell,
                              long long size_cap) {
  if (ell < 1) throw ValidationError("product chain requires ell >= 1");
  if (!primitive_impl(model.kernel))
    throw NotPrimitive("base model is not primitive");
  if (ell == 1) return model;

  int s = model.state_count();
  long long states = 1;
  for (int i = 0; i < ell; ++i) {
    states *= s;
    if (states > size_cap)
      throw SizeCapExceeded("product chain exceeds the size cap of " +
                            std::to_string(size_cap) + " states");
  }

  // Coordinate i advances i+1 base steps per product step.
  std::vector<Eigen::MatrixXd> powers(ell);
  powers[0] = model.kernel;
  for (int i = 1; i < ell; ++i) powers[i] = powers[i - 1] * model.kernel;

  TransitionModel out;
  out.label = model.label + "^x" + std::to_string(ell);
  out.kernel.resize(states, states);
  for (long long a = 0; a < states; ++a) {
    auto xa = product_tuple(a, s, ell);
    for (long long b = 0; b < states; ++b) {
      auto xb = product_tuple(b, s, ell);
      double q = 1.0;
      for (int i = 0; i < ell; ++i) q *= powers[i](xa[i], xb[i]);
      out.kernel(a, b) = q;
    }
  }
  out.stationary.resize(states);
  for (long long a = 0; a < states; ++a) {
    auto xa = product_tuple(a, s, ell);
    double m = 1.0;
    for (int i = 0; i < ell; ++i) m *= model.stationary(xa[i]);
    out.stationary(a) = m;
  }
  if (model.doeblin_kappa) {
    double k = 1.0;
    for (int i = 0; i < ell; ++i) k *= *model.doeblin_kappa;
    // kappa^ell is a valid sandwich constant for the product only when each
    // power kernel keeps the bound; recompute instead of guessing.
    try {
      out.doeblin_kappa = validate_doeblin(out.kernel, out.stationary);
    } catch (const DoeblinViolated&) {
      out.doeblin_kappa.reset();
    }
  }
  return out;
}

PathStream::PathStream(const TransitionModel& model, std::uint64_t seed)
    : model_(model), rng_(seed) {
  int s = model.state_count();
  cdf_.resize(static_cast<std::size_t>(s) * s + s);
  for (int i = 0; i < s; ++i) {
    double acc = 0.0;
    for (int j = 0; j < s; ++j) {
      acc += model.kernel(i, j);
      cdf_[static_cast<std::size_t>(i) * s + j] = acc;
    }
    cdf_[static_cast<std::size_t>(i) * s + s - 1] = 1.0;
  }
  double acc = 0.0;
  for (int j = 0; j < s; ++j) {
    acc += model.stationary(j);
    cdf_[static_cast<std::size_t>(s) * s + j] = acc;
  }
  cdf_[static_cast<std::size_t>(s) * s + s - 1] = 1.0;
}

std::uint32_t PathStream::draw(const double* cdf_row) {
  double u = rng_.uniform01();
  int s = model_.state_count();
  int j = 0;
  while (j < s - 1 && u >= cdf_row[j]) ++j;
  return static_cast<std::uint32_t>(j);
}

std::uint32_t PathStream::next() {
  int s = model_.state_count();
  if (pos_ < 0) {
    state_ = draw(&cdf_[static_cast<std::size_t>(s) * s]);
  } else {
    state_ = draw(&cdf_[static_cast<std::size_t>(state_) * s]);
  }
  ++pos_;
  return state_;
}

PathSample sample_path(const TransitionModel& model, std::size_t length,
                       std::uint64_t seed) {
  if (length < 1) throw ValidationError("path length must be >= 1");
  PathSample out;
  out.seed = seed;
  out.model_label = model.label;
  out.states.resize(length);
  PathStream stream(model, seed);
  for (std::size_t t = 0; t < length; ++t) out.states[t] = stream.next();
  return out;
}

std::string TransitionModel::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["states"] = state_count();
  std::vector<double> flat(kernel.size());
  for (int r = 0; r < kernel.rows(); ++r)
    for (int c = 0; c < kernel.cols(); ++c)
      flat[static_cast<std::size_t>(r) * kernel.cols() + c] = kernel(r, c);
  j["kernel"] = flat;
  j["stationary"] = std::vector<double>(stationary.data(),
                                        stationary.data() + stationary.size());
  if (doeblin_kappa)
    j["doeblin_kappa"] = *doeblin_kappa;
  else
    j["doeblin_kappa"] = nullptr;
  return j.dump(2);
}

TransitionModel TransitionModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model JSON parse error: ") + e.what());
  }
  TransitionModel m;
  try {
    m.label = j.at("label").get<std::string>();
    int s = j.at("states").get<int>();
    auto flat = j.at("kernel").get<std::vector<double>>();
    auto mu = j.at("stationary").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != s * s ||
        static_cast<int>(mu.size()) != s)
      throw ValidationError("model JSON dimensions are inconsistent");
    m.kernel.resize(s, s);
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < s; ++c)
        m.kernel(r, c) = flat[static_cast<std::size_t>(r) * s + c];
    m.stationary = Eigen::Map<Eigen::VectorXd>(mu.data(), s);
    if (j.contains("doeblin_kappa") && !j["doeblin_kappa"].is_null())
      m.doeblin_kappa = j["doeblin_kappa"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON field error: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace nclln
