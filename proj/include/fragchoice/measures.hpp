#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fragchoice/errors.hpp"
#include "fragchoice/rng.hpp"
#include "fragchoice/rules.hpp"

namespace fragchoice {

// ---------------------------------------------------------------------------
// StepCDF: purely atomic, right-continuous distribution function on (0,inf).
// Total mass need not be 1 (size-biased empirical CDFs carry total interval
// length). Atoms at identical locations are merged.
// ---------------------------------------------------------------------------
class StepCDF {
 public:
  StepCDF() = default;

  // Atoms given as (location, mass); sorted and merged here.
  explicit StepCDF(std::vector<std::pair<double, double>> atoms) {
    std::sort(atoms.begin(), atoms.end());
    xs_.reserve(atoms.size());
    masses_.reserve(atoms.size());
    for (const auto& [x, m] : atoms) {
      if (!(x > 0.0)) throw std::invalid_argument("StepCDF: atom location must be > 0");
      if (!(m > 0.0)) throw std::invalid_argument("StepCDF: atom mass must be > 0");
      if (!xs_.empty() && x == xs_.back()) {
        masses_.back() += m;
      } else {
        xs_.push_back(x);
        masses_.push_back(m);
      }
    }
    cum_.resize(xs_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      s += masses_[i];
      cum_[i] = s;
    }
  }

  std::size_t size() const { return xs_.size(); }
  const std::vector<double>& locations() const { return xs_; }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<double>& cumulative() const { return cum_; }
  double total_mass() const { return cum_.empty() ? 0.0 : cum_.back(); }

  // F(x), right-continuous: mass of atoms at locations <= x.
  double value(double x) const {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }

  // F(x-): mass of atoms strictly below x.
  double left_value(double x) const {
    auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }

  // Generalized right-continuous inverse inf{x : F(x) > p}. For p equal to
  // the total mass, returns the largest atom (the natural quantile there).
  double inverse(double p) const {
    if (!(p > 0.0) || p > total_mass() * (1.0 + 1e-12))
      throw std::invalid_argument("StepCDF::inverse: p out of (0, total_mass]");
    auto it = std::upper_bound(cum_.begin(), cum_.end(), p);
    if (it == cum_.end()) return xs_.back();
    return xs_[static_cast<std::size_t>(it - cum_.begin())];
  }

  // Rescale all atom locations by a positive factor.
  StepCDF scaled(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("StepCDF::scaled: factor must be > 0");
    StepCDF out;
    out.xs_.reserve(xs_.size());
    for (double x : xs_) out.xs_.push_back(x * factor);
    out.masses_ = masses_;
    out.cum_ = cum_;
    return out;
  }

 private:
  std::vector<double> xs_, masses_, cum_;
};

// Size-biased empirical CDF of a set of interval lengths: each distinct
// length x carries mass equal to the sum of the lengths equal to x.
inline StepCDF size_biased_cdf(std::span<const double> lengths) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(lengths.size());
  for (double l : lengths) {
    if (!(l > 0.0)) throw std::invalid_argument("size_biased_cdf: nonpositive length");
    atoms.emplace_back(l, l);
  }
  return StepCDF(std::move(atoms));
}

// ---------------------------------------------------------------------------
// GridCDF: absolutely continuous distribution function sampled on a strictly
// increasing grid, interpolated piecewise linearly. Mass not reached by the
// grid is tracked explicitly in tail_mass (heavy-tailed laws cannot reach
// machine-zero tails on a finite grid).
// ---------------------------------------------------------------------------
class GridCDF {
 public:
  GridCDF() = default;

  GridCDF(std::vector<double> grid, std::vector<double> values,
          double tail_mass = -1.0)
      : x_(std::move(grid)), f_(std::move(values)) {
    if (x_.size() != f_.size() || x_.size() < 2)
      throw std::invalid_argument("GridCDF: grid/value size mismatch");
    if (!(x_.front() > 0.0))
      throw std::invalid_argument("GridCDF: grid must start above 0");
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1]))
        throw std::invalid_argument("GridCDF: grid not strictly increasing");
      if (f_[i] < f_[i - 1] - 1e-12)
        throw std::invalid_argument("GridCDF: values not nondecreasing");
      if (f_[i] < f_[i - 1]) f_[i] = f_[i - 1];
    }
    if (f_.front() < 0.0 || f_.back() > 1.0 + 1e-9)
      throw std::invalid_argument("GridCDF: values outside [0,1]");
    tail_mass_ = tail_mass >= 0.0 ? tail_mass : std::max(0.0, 1.0 - f_.back());
  }

  const std::vector<double>& grid() const { return x_; }
  const std::vector<double>& values() const { return f_; }
  double tail_mass() const { return tail_mass_; }
  std::size_t size() const { return x_.size(); }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  // Piecewise-linear evaluation. Below the grid the CDF is extended
  // quadratically (matching a density that vanishes linearly at 0); above
  // the grid it is frozen at its last value.
  double value(double x) const {
    if (x <= x_.front()) {
      if (x <= 0.0) return 0.0;
      double r = x / x_.front();
      return f_.front() * r * r;
    }
    if (x >= x_.back()) return f_.back();
    std::size_t j = cell_index(x);
    double t = (x - x_[j]) / (x_[j + 1] - x_[j]);
    return f_[j] + t * (f_[j + 1] - f_[j]);
  }

  // inf{x : F(x) > p} by monotone search. p must lie in (0, F(x_max)].
  double inverse(double p) const {
    if (!(p > 0.0) || p > f_.back() * (1.0 + 1e-12))
      throw std::invalid_argument("GridCDF::inverse: p out of range");
    auto it = std::upper_bound(f_.begin(), f_.end(), p);
    if (it == f_.end()) return x_.back();
    std::size_t j = static_cast<std::size_t>(it - f_.begin());
    if (j == 0) return x_.front() * std::sqrt(p / std::max(f_.front(), 1e-300));
    double df = f_[j] - f_[j - 1];
    double t = df > 0.0 ? (p - f_[j - 1]) / df : 0.0;
    return x_[j - 1] + t * (x_[j] - x_[j - 1]);
  }

  // Inverse-CDF sample of the law conditioned on the grid range.
  double sample(Rng& rng) const {
    double p = rng.uniform_open() * f_.back();
    return p <= 0.0 ? x_.front() : inverse(p);
  }

 private:
  std::size_t cell_index(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - x_.begin());
    return std::min(std::max<std::size_t>(j, 1) - 1, x_.size() - 2);
  }

  std::vector<double> x_, f_;
  double tail_mass_ = 0.0;
};

// Log-spaced grid helper: n points from x0 to x1.
inline std::vector<double> log_grid(double x0, double x1, int n) {
  if (!(x0 > 0.0) || !(x1 > x0) || n < 2)
    throw std::invalid_argument("log_grid: need 0 < x0 < x1 and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  double l0 = std::log(x0), l1 = std::log(x1);
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  g.front() = x0;
  g.back() = x1;
  return g;
}

// Parse "1e-4:50:4096".
inline std::vector<double> parse_grid_spec(const std::string& spec) {
  auto c1 = spec.find(':');
  auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw std::invalid_argument("grid spec: expected x0:x1:n, got '" + spec + "'");
  double x0 = std::stod(spec.substr(0, c1));
  double x1 = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  int n = std::stoi(spec.substr(c2 + 1));
  return log_grid(x0, x1, n);
}

// ---------------------------------------------------------------------------
// Radon-Nikodym derivative of Psi(F) with respect to F on an atomic F.
// At an atom with jump D the value is (Psi(F(x)) - Psi(F(x-))) / D, which
// differs from psi(F(x)) whenever F has atoms.
// ---------------------------------------------------------------------------
inline std::vector<double> rn_derivative_psi(const StepCDF& F,
                                             const ChoiceRule& rule) {
  if (F.size() == 0) throw std::invalid_argument("rn_derivative_psi: empty CDF");
  std::vector<double> out(F.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    double cur = F.cumulative()[i];
    out[i] = (rule.Psi(cur) - rule.Psi(prev)) / F.masses()[i];
    prev = cur;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ||F||_{x^-2} = integral of x^{-2} F(x) dx; equals integral of x^{-1} dF(x)
// for distribution functions vanishing at 0.
// ---------------------------------------------------------------------------
inline double candy_norm(const StepCDF& F) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i)
    s += F.masses()[i] / F.locations()[i];
  return s;
}

inline double candy_norm(const GridCDF& F) {
  const auto& x = F.grid();
  const auto& f = F.values();
  // Exact integral of F'(z)/z for the piecewise-linear interpolant,
  // cell by cell: dF * ln(x_{j+1}/x_j) / dx.
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    double df = f[j + 1] - f[j];
    if (df > 0.0) s += df * std::log(x[j + 1] / x[j]) / (x[j + 1] - x[j]);
  }
  // Below-grid mass under the quadratic extension, plus a tail lower bound.
  s += 2.0 * f.front() / x.front();
  s += F.tail_mass() / x.back();
  return s;
}

// ---------------------------------------------------------------------------
// d_{L1loc}(F,G) = sum_{k>=1} 2^{-k} /\ int_0^k |F-G| dx, truncated at
// K_max = 40 (the omitted remainder is below 1e-12).
// ---------------------------------------------------------------------------
namespace detail {

inline void collect_breaks(const StepCDF& c, std::vector<double>& b, double hi) {
  for (double x : c.locations()) {
    if (x >= hi) break;
    b.push_back(x);
  }
}

inline void collect_breaks(const GridCDF& c, std::vector<double>& b, double hi) {
  for (double x : c.grid()) {
    if (x >= hi) break;
    b.push_back(x);
  }
}

}  // namespace detail

// Single pass over the merged breakpoints of F and G on [0, 40]; both are
// piecewise linear between breakpoints, so each piece integrates exactly
// (the linear difference is reconstructed from two interior samples, which
// sidesteps jump-location case analysis). Integer points are breakpoints,
// so pieces never straddle the unit intervals the metric weights.
template <class CdfA, class CdfB>
double dist_l1loc(const CdfA& a, const CdfB& b) {
  constexpr int kMax = 40;
  std::vector<double> breaks;
  breaks.push_back(0.0);
  detail::collect_breaks(a, breaks, static_cast<double>(kMax));
  detail::collect_breaks(b, breaks, static_cast<double>(kMax));
  for (int k = 1; k <= kMax; ++k) breaks.push_back(static_cast<double>(k));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double unit[kMax] = {};  // integral of |F-G| over [k, k+1)
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double lo = breaks[i], up = breaks[i + 1];
    double w = up - lo;
    if (!(w > 0.0)) continue;
    double t1 = lo + w / 3.0, t2 = lo + 2.0 * w / 3.0;
    double d1 = a.value(t1) - b.value(t1);
    double d2 = a.value(t2) - b.value(t2);
    double slope = (d2 - d1) / (t2 - t1);
    double dlo = d1 + slope * (lo - t1);
    double dup = d1 + slope * (up - t1);
    double piece;
    if (dlo * dup >= 0.0) {
      piece = 0.5 * std::abs(dlo + dup) * w;
    } else {
      double xc = w * std::abs(dlo) / (std::abs(dlo) + std::abs(dup));
      piece = 0.5 * std::abs(dlo) * xc + 0.5 * std::abs(dup) * (w - xc);
    }
    unit[static_cast<int>(lo)] += piece;
  }

  double d = 0.0, running = 0.0;
  for (int k = 1; k <= kMax; ++k) {
    running += unit[k - 1];
    d += std::min(std::pow(2.0, -k), running);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Total variation distances.
// ---------------------------------------------------------------------------

// Grid-grid TV: half the L1 distance between cell masses (the exact TV of
// the piecewise-linear-density laws when grids coincide; b is resampled
// onto a's grid otherwise), plus below-grid and tail-mass corrections.
inline double dist_tv(const GridCDF& a, const GridCDF& b) {
  const auto& x = a.grid();
  double s = std::abs(a.value(x.front()) - b.value(x.front()));
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    double da = a.values()[j + 1] - a.values()[j];
    double db = b.value(x[j + 1]) - b.value(x[j]);
    s += std::abs(da - db);
  }
  double ta = 1.0 - a.values().back();
  double tb = 1.0 - b.value(x.back());
  s += std::abs(ta - tb);
  return 0.5 * s;
}

// Samples-vs-grid TV lower bound: 200 equal-reference-mass bins, half the
// summed absolute discrepancy of empirical bin masses.
inline double dist_tv(std::span<const double> samples, const GridCDF& b,
                      int bins = 200) {
  if (samples.size() < 100)
    throw std::invalid_argument("dist_tv: need >= 100 samples");
  std::vector<double> edges(static_cast<std::size_t>(bins) - 1);
  double top = b.values().back() + b.tail_mass();
  for (int j = 1; j < bins; ++j) {
    double p = top * j / bins;
    edges[static_cast<std::size_t>(j - 1)] =
        p >= b.values().back() ? b.x_max() : b.inverse(p);
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : samples) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    counts[static_cast<std::size_t>(it - edges.begin())]++;
  }
  double inv_n = 1.0 / static_cast<double>(samples.size());
  double s = 0.0;
  for (int j = 0; j < bins; ++j)
    s += std::abs(counts[static_cast<std::size_t>(j)] * inv_n - 1.0 / bins);
  return 0.5 * s;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distance of sorted-or-not samples against a CDF given
// as a callable x -> F(x).
// ---------------------------------------------------------------------------
template <class F>
double ks_distance(std::vector<double> samples, F&& cdf) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double fx = cdf(samples[i]);
    d = std::max(d, std::abs(fx - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - fx));
  }
  return d;
}

}  // namespace fragchoice
