#include "core/sums.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace nclln {

long long IndexMap::operator()(long long m) const {
  switch (kind) {
    case Kind::linear:
      return factor * m;
    case Kind::power: {
      long long v = 1;
      for (int i = 0; i < exponent; ++i) v *= m;
      return v;
    }
    case Kind::table:
      return values.at(static_cast<std::size_t>(m - 1));
  }
  return m;
}

IndexMaps IndexMaps::linear(int ell) {
  IndexMaps q;
  q.maps.resize(ell);
  for (int i = 0; i < ell; ++i) q.maps[i].factor = i + 1;
  q.linear_prefix = ell;
  return q;
}

long long IndexMaps::max_index(long long n) const {
  long long worst = 0;
  for (const auto& m : maps) worst = std::max(worst, m(n));
  return worst;
}

void IndexMaps::validate(long long n) const {
  if (maps.empty()) throw ValidationError("index maps must be nonempty");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    long long prev = 0;
    for (long long m = 1; m <= n; ++m) {
      long long v = maps[i](m);
      if (v <= prev)
        throw ValidationError("index map " + std::to_string(i) +
                              " is not strictly increasing");
      prev = v;
    }
  }
  int lp = 0;
  while (lp < ell() && maps[lp].kind == IndexMap::Kind::linear &&
         maps[lp].factor == lp + 1)
    ++lp;
  if (lp != linear_prefix)
    throw ValidationError("linear_prefix does not match the leading maps");
}

StepCurve StepCurve::zero(int grid, int dim) {
  StepCurve c;
  c.grid = grid;
  c.dim = dim;
  c.values.assign(static_cast<std::size_t>(grid + 1) * dim, 0.0);
  return c;
}

StepCurve StepCurve::line(int grid, double slope) {
  StepCurve c = zero(grid, 1);
  for (int j = 1; j <= grid; ++j)
    c.values[j] = slope * static_cast<double>(j) / grid;
  return c;
}

double curve_distance(const StepCurve& a, const StepCurve& b) {
  if (a.grid != b.grid || a.dim != b.dim)
    throw ValidationError("curve grids must match for distance");
  double worst = 0.0;
  for (int j = 0; j <= a.grid; ++j) {
    double s = 0.0;
    for (int c = 0; c < a.dim; ++c) {
      double diff = a.at(j, c) - b.at(j, c);
      s += diff * diff;
    }
    worst = std::max(worst, s);
  }
  return std::sqrt(worst);
}

namespace {

PrefixSums accumulate(const Observable& f, long long n,
                      const std::function<long long(int, long long)>& coord) {
  PrefixSums out;
  out.n = n;
  out.dim = f.dim;
  out.data.assign(static_cast<std::size_t>(n + 1) * f.dim, 0.0);
  std::vector<int> tuple(f.ell);
  for (long long k = 1; k <= n; ++k) {
    long long idx = 0;
    for (int i = 0; i < f.ell; ++i)
      idx = idx * f.base_states + static_cast<int>(coord(i, k));
    for (int c = 0; c < f.dim; ++c)
      out.data[static_cast<std::size_t>(k) * f.dim + c] =
          out.data[static_cast<std::size_t>(k - 1) * f.dim + c] + f.table(idx, c);
  }
  return out;
}

}  // namespace

PrefixSums prefix_sums_nonconventional(const PathSample& path,
                                       const Observable& f, long long n,
                                       const IndexMaps& q) {
  if (q.ell() != f.ell)
    throw ValidationError("index map count must equal the observable arity");
  long long need = q.max_index(n);
  if (static_cast<long long>(path.length()) < need)
    throw PathTooShort("path length " + std::to_string(path.length()) +
                       " < required " + std::to_string(need));
  return accumulate(f, n, [&](int i, long long k) {
    return static_cast<long long>(path.states[q.maps[i](k) - 1]);
  });
}

PrefixSums independent_copies_prefix_sums(const std::vector<PathSample>& paths,
                                          const Observable& f, long long n,
                                          const IndexMaps& q) {
  if (static_cast<int>(paths.size()) != f.ell || q.ell() != f.ell)
    throw ValidationError("need one path per observable coordinate");
  std::set<std::uint64_t> seeds;
  for (const auto& p : paths)
    if (!seeds.insert(p.seed).second)
      throw SeedCollision("independent copies require pairwise distinct seeds");
  for (int i = 0; i < f.ell; ++i) {
    long long need = q.maps[i](n);
    if (static_cast<long long>(paths[i].length()) < need)
      throw PathTooShort("copy path " + std::to_string(i) + " too short");
  }
  return accumulate(f, n, [&](int i, long long k) {
    return static_cast<long long>(paths[i].states[q.maps[i](k) - 1]);
  });
}

std::vector<PathSample> make_copy_paths(const TransitionModel& model,
                                        const IndexMaps& q, long long n,
                                        const std::vector<std::uint64_t>& seeds) {
  if (static_cast<int>(seeds.size()) != q.ell())
    throw ValidationError("need one seed per coordinate");
  std::vector<PathSample> out;
  out.reserve(seeds.size());
  for (int i = 0; i < q.ell(); ++i) {
    long long need = q.maps[i](n);
    if (i < q.linear_prefix) {
      out.push_back(sample_path(model, static_cast<std::size_t>(need), seeds[i]));
    } else {
      // Nonlinear coordinates take i.i.d. draws from mu.
      PathSample p;
      p.seed = seeds[i];
      p.model_label = model.label + "/iid";
      p.states.resize(static_cast<std::size_t>(need));
      Rng rng(seeds[i]);
      int s = model.state_count();
      std::vector<double> cdf(s);
      double acc = 0.0;
      for (int j = 0; j < s; ++j) {
        acc += model.stationary(j);
        cdf[j] = acc;
      }
      cdf[s - 1] = 1.0;
      for (auto& st : p.states) {
        double u = rng.uniform01();
        int j = 0;
        while (j < s - 1 && u >= cdf[j]) ++j;
        st = static_cast<std::uint32_t>(j);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

int window_length(long long n, double c) {
  if (n < 2) throw ValidationError("window length requires n >= 2");
  if (c <= 0.0) throw ValidationError("window length requires c > 0");
  // Snap protects exact-boundary products like (1/ln 2) * ln 2 from rounding
  // just below an integer.
  int b = static_cast<int>(std::floor(c * std::log(static_cast<double>(n)) + 1e-9));
  if (b < 1)
    throw WindowTooShort("floor(c ln n) = " + std::to_string(b) + " < 1");
  return b;
}

StepCurve window_curve(const PrefixSums& prefix, long long m, long long n,
                       double c) {
  int b = window_length(n, c);
  if (m < 0 || m + b > n)
    throw OffsetOutOfRange("offset " + std::to_string(m) +
                           " leaves the window outside [0, n]");
  if (prefix.n < m + b) throw PathTooShort("prefix sums do not cover the window");
  StepCurve out = StepCurve::zero(b, prefix.dim);
  for (int j = 1; j <= b; ++j)
    for (int comp = 0; comp < prefix.dim; ++comp)
      out.at(j, comp) = (prefix.at(m + j, comp) - prefix.at(m, comp)) / b;
  return out;
}

CurveFamily window_family(std::shared_ptr<const PrefixSums> prefix,
                          long long n, double c) {
  int b = window_length(n, c);
  if (prefix->n < n) throw PathTooShort("prefix sums do not cover 0..n");
  CurveFamily fam;
  fam.prefix = std::move(prefix);
  fam.n = n;
  fam.c = c;
  fam.b = b;
  return fam;
}

StepCurve CurveFamily::curve(long long m) const {
  return window_curve(*prefix, m, n, c);
}

std::string curve_family_to_csv(const CurveFamily& family) {
  std::ostringstream os;
  os.precision(17);
  os << "# n=" << family.n << ",c=" << family.c << ",b=" << family.b
     << ",d=" << family.dim() << "\r\n";
  os << "m,j";
  for (int c = 0; c < family.dim(); ++c) os << ",value_" << c;
  os << "\r\n";
  for (long long m = 0; m < family.count(); ++m) {
    for (int j = 0; j <= family.b; ++j) {
      os << m << "," << j;
      for (int c = 0; c < family.dim(); ++c) os << "," << family.value(m, j, c);
      os << "\r\n";
    }
  }
  return os.str();
}

WindowMaxResult scalar_window_max_streaming(const TransitionModel& model,
                                            const Observable& f,
                                            const IndexMaps& q, long long n,
                                            int b, std::uint64_t seed) {
  if (f.dim != 1) throw DimensionNotScalar("streaming window max requires d = 1");
  if (q.ell() != f.ell)
    throw ValidationError("index map count must equal the observable arity");
  if (b < 1 || b > n) throw ValidationError("need 1 <= b <= n");

  // One regenerated stream per coordinate, advanced to q_i(k) at step k.
  // Identical seeds give identical sequences, so the cursors all walk the
  // same realization of the chain.
  std::vector<PathStream> streams;
  streams.reserve(f.ell);
  for (int i = 0; i < f.ell; ++i) streams.emplace_back(model, seed);
  std::vector<long long> pos(f.ell, 0);    // last generated 1-based index
  std::vector<std::uint32_t> cur(f.ell, 0);

  std::vector<double> ring(b, 0.0);
  double window_sum = 0.0;
  WindowMaxResult out;
  out.b = b;
  out.max_avg = -std::numeric_limits<double>::infinity();
  for (long long k = 1; k <= n; ++k) {
    long long idx = 0;
    for (int i = 0; i < f.ell; ++i) {
      long long target = q.maps[i](k);
      while (pos[i] < target) {
        cur[i] = streams[i].next();
        ++pos[i];
      }
      idx = idx * f.base_states + cur[i];
    }
    double val = f.table(idx, 0);
    int slot = static_cast<int>(k % b);
    window_sum += val - ring[slot];
    ring[slot] = val;
    if (k >= b) {
      double avg = window_sum / b;
      if (avg > out.max_avg) {
        out.max_avg = avg;
        out.arg_offset = k - b;
      }
    }
  }
  return out;
}

}  // namespace nclln
