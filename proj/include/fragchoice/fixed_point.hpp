#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fragchoice/errors.hpp"
#include "fragchoice/measures.hpp"
#include "fragchoice/rules.hpp"

namespace fragchoice {

// ---------------------------------------------------------------------------
// Non-negative rate R on (0,inf) with its antiderivative rho(x) = int_1^x R
// (signed below 1) and the generalized inverse rho^{-1}(y) = inf{x: rho(x)
// >= y}. Builtin constant rates use closed forms; tabulated rates linearly
// interpolate R on their grid and, when extrapolation is enabled, extend R
// by its boundary values.
// ---------------------------------------------------------------------------
class RateFunction {
 public:
  static RateFunction constant(double c) {
    if (!(c >= 0.0)) throw std::invalid_argument("RateFunction: R must be >= 0");
    RateFunction r;
    r.const_ = c;
    r.is_const_ = true;
    return r;
  }

  static RateFunction from_table(std::vector<double> x, std::vector<double> r,
                                 bool allow_extrapolation = false) {
    if (x.size() != r.size() || x.size() < 2)
      throw std::invalid_argument("RateFunction: bad table");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0) || (i > 0 && !(x[i] > x[i - 1])))
        throw std::invalid_argument("RateFunction: grid not increasing/positive");
      if (r[i] < 0.0) throw std::invalid_argument("RateFunction: R must be >= 0");
    }
    RateFunction rf;
    rf.x_ = std::move(x);
    rf.r_ = std::move(r);
    rf.extrapolate_ = allow_extrapolation;
    rf.build_rho();
    return rf;
  }

  // R = psi(F(x)) tabulated on F's grid. Boundary extrapolation is enabled:
  // F is frozen outside its grid, so R is too.
  static RateFunction psi_of(const ChoiceRule& rule, const GridCDF& F) {
    std::vector<double> r(F.size());
    for (std::size_t i = 0; i < F.size(); ++i)
      r[i] = std::max(0.0, rule.psi(F.values()[i]));
    RateFunction rf;
    rf.x_ = F.grid();
    rf.r_ = std::move(r);
    rf.extrapolate_ = true;
    rf.build_rho();
    return rf;
  }

  bool is_constant() const { return is_const_; }
  double constant_value() const { return const_; }
  const std::vector<double>& grid() const { return x_; }

  double rate(double x) const {
    if (is_const_) return const_;
    if (x <= x_.front()) {
      require_extrapolation(x);
      return r_.front();
    }
    if (x >= x_.back()) {
      require_extrapolation(x);
      return r_.back();
    }
    std::size_t j = cell(x);
    double t = (x - x_[j]) / (x_[j + 1] - x_[j]);
    return r_[j] + t * (r_[j + 1] - r_[j]);
  }

  // rho(x) = int_1^x R(u) du, negative for x < 1.
  double rho(double x) const {
    if (!(x > 0.0)) throw std::invalid_argument("rho: x must be > 0");
    if (is_const_) return const_ * (x - 1.0);
    if (x <= x_.front()) {
      require_extrapolation(x);
      return rho_[0] - r_.front() * (x_.front() - x);
    }
    if (x >= x_.back()) {
      require_extrapolation(x);
      return rho_.back() + r_.back() * (x - x_.back());
    }
    std::size_t j = cell(x);
    double h = x - x_[j];
    double rx = r_[j] + (r_[j + 1] - r_[j]) * h / (x_[j + 1] - x_[j]);
    return rho_[j] + 0.5 * (r_[j] + rx) * h;
  }

  // sup of rho (may be +inf).
  double rho_sup() const {
    if (is_const_) return const_ > 0.0 ? inf() : 0.0;
    if (extrapolate_ && r_.back() > 0.0) return inf();
    return rho_.back();
  }

  // inf{x : rho(x) >= y}; +inf if y exceeds rho_sup. Flat stretches resolve
  // to their left edge.
  double rho_inverse(double y) const {
    if (is_const_) {
      if (const_ == 0.0) return y <= 0.0 ? 0.0 : inf();
      return 1.0 + y / const_;
    }
    if (y <= rho_[0]) {
      // below the table: R constant r_.front()
      if (y == rho_[0]) return x_.front();
      require_extrapolation(x_.front() / 2.0);
      if (r_.front() == 0.0) return 0.0;
      return x_.front() - (rho_[0] - y) / r_.front();
    }
    if (y > rho_.back()) {
      if (!extrapolate_ || r_.back() == 0.0) return inf();
      return x_.back() + (y - rho_.back()) / r_.back();
    }
    auto it = std::lower_bound(rho_.begin(), rho_.end(), y);
    std::size_t j = static_cast<std::size_t>(it - rho_.begin());
    if (rho_[j] == y) {
      // plateau: step back to its left edge
      while (j > 0 && rho_[j - 1] == y) --j;
      return x_[j];
    }
    // rho passes through y inside cell (j-1, j); invert the quadratic
    // antiderivative of the linear rate by bisection on the cell.
    double lo = x_[j - 1], hi = x_[j];
    for (int it2 = 0; it2 < 64 && hi - lo > 1e-15 * hi; ++it2) {
      double mid = 0.5 * (lo + hi);
      if (rho(mid) < y)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  RateFunction() = default;

  static double inf() { return std::numeric_limits<double>::infinity(); }

  void require_extrapolation(double x) const {
    if (!extrapolate_)
      throw numerical_error("RateFunction: evaluation at " + std::to_string(x) +
                            " outside table range (extrapolation disabled)");
  }

  std::size_t cell(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - x_.begin());
    return std::min(std::max<std::size_t>(j, 1) - 1, x_.size() - 2);
  }

  void build_rho() {
    rho_.resize(x_.size());
    rho_[0] = 0.0;
    for (std::size_t j = 1; j < x_.size(); ++j)
      rho_[j] = rho_[j - 1] + 0.5 * (r_[j - 1] + r_[j]) * (x_[j] - x_[j - 1]);
    // Anchor rho(1) = 0.
    double at1;
    if (1.0 <= x_.front()) {
      at1 = rho_[0] - r_.front() * (x_.front() - 1.0);
    } else if (1.0 >= x_.back()) {
      at1 = rho_.back() + r_.back() * (1.0 - x_.back());
    } else {
      std::size_t j = cell(1.0);
      double h = 1.0 - x_[j];
      double r1 = r_[j] + (r_[j + 1] - r_[j]) * h / (x_[j + 1] - x_[j]);
      at1 = rho_[j] + 0.5 * (r_[j] + r1) * h;
    }
    for (double& v : rho_) v -= at1;
  }

  bool is_const_ = false;
  double const_ = 0.0;
  bool extrapolate_ = false;
  std::vector<double> x_, r_, rho_;
};

// Parse `const:c`, `table:PATH` (CSV x,R), or `psi:RULE` descriptors. The
// psi form needs a solved CDF, supplied by the caller.
inline RateFunction parse_rate(const std::string& descriptor,
                               const GridCDF* solved_for_psi = nullptr,
                               const ChoiceRule* rule_for_psi = nullptr,
                               bool allow_extrapolation = false) {
  if (descriptor.rfind("const:", 0) == 0)
    return RateFunction::constant(std::stod(descriptor.substr(6)));
  if (descriptor.rfind("table:", 0) == 0) {
    std::string path = descriptor.substr(6);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("rate table: cannot open " + path);
    std::vector<double> xs, rs;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double a, b;
      if (!(ls >> a >> b)) {
        if (first) {
          first = false;
          continue;
        }
        throw std::invalid_argument("rate table: bad line '" + line + "'");
      }
      first = false;
      xs.push_back(a);
      rs.push_back(b);
    }
    return RateFunction::from_table(std::move(xs), std::move(rs),
                                    allow_extrapolation);
  }
  if (descriptor.rfind("psi:", 0) == 0) {
    if (!solved_for_psi || !rule_for_psi)
      throw std::invalid_argument("rate psi:RULE requires a solved CDF");
    return RateFunction::psi_of(*rule_for_psi, *solved_for_psi);
  }
  throw std::invalid_argument("unknown rate descriptor '" + descriptor + "'");
}

// ---------------------------------------------------------------------------
// Stationary law of the cell process: density x exp(-rho(x)) / Z.
// ---------------------------------------------------------------------------
struct StationaryLaw {
  double Z = 0.0;
  GridCDF cdf;
  std::vector<double> density;  // on cdf.grid()

  double pdf(double x) const {
    const auto& g = cdf.grid();
    if (x <= g.front() || x >= g.back()) return 0.0;
    auto it = std::upper_bound(g.begin(), g.end(), x);
    std::size_t j = static_cast<std::size_t>(it - g.begin()) - 1;
    double t = (x - g[j]) / (g[j + 1] - g[j]);
    return density[j] + t * (density[j + 1] - density[j]);
  }

  double sample(Rng& rng) const { return cdf.sample(rng); }
};

namespace detail {

// (1 - e^{-z}) / z, stable near 0.
inline double em1_over(double z) {
  return z < 1e-8 ? 1.0 - 0.5 * z : -std::expm1(-z) / z;
}

// (1 - (1+z) e^{-z}) / z^2, stable near 0.
inline double em2_over(double z) {
  if (z < 1e-4) return 0.5 - z / 3.0 + z * z / 8.0;
  return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

// Mass of int_a^b y exp(-rho(y)) dy with rho linear across the cell
// (rate = (rho_b - rho_a)/(b-a)). Exact for cellwise-constant rates.
inline double exp_cell_mass(double a, double b, double rho_a, double rho_b) {
  double d = b - a;
  double z = rho_b - rho_a;  // = rate * d, >= 0
  if (z <= 0.0) return std::exp(-rho_a) * 0.5 * (b * b - a * a);
  return std::exp(-rho_a) * d * (a * em1_over(z) + d * em2_over(z));
}

// Assemble a CDF from per-cell masses: forward cumulative below the median
// mass, one minus backward cumulative above, so both F and 1-F keep full
// relative precision. below/tail are mass estimates outside the grid.
inline GridCDF assemble_cdf(const std::vector<double>& x,
                            const std::vector<double>& cell_mass, double below,
                            double tail, double* z_out) {
  std::size_t n = x.size();
  std::vector<double> fwd(n), bwd(n);
  fwd[0] = below;
  for (std::size_t j = 1; j < n; ++j) fwd[j] = fwd[j - 1] + cell_mass[j - 1];
  bwd[n - 1] = tail;
  for (std::size_t j = n - 1; j > 0; --j) bwd[j - 1] = bwd[j] + cell_mass[j - 1];
  double Z = fwd[n - 1] + tail;
  if (!(Z > 0.0) || !std::isfinite(Z))
    throw numerical_error("assemble_cdf: degenerate normalization");
  std::vector<double> f(n);
  for (std::size_t j = 0; j < n; ++j)
    f[j] = fwd[j] <= 0.5 * Z ? fwd[j] / Z : 1.0 - bwd[j] / Z;
  for (std::size_t j = 1; j < n; ++j) f[j] = std::max(f[j], f[j - 1]);
  if (z_out) *z_out = Z;
  return GridCDF(x, std::move(f), tail / Z);
}

// Tail of int_xm^inf y exp(-rho(y)) dy under constant-R extrapolation.
inline double const_rate_tail(double xm, double rho_xm, double r) {
  if (!(r > 0.0)) return std::numeric_limits<double>::infinity();
  return std::exp(-rho_xm) * (xm / r + 1.0 / (r * r));
}

}  // namespace detail

// Builds the stationary law from a rate function on the given grid. Signals
// a diverged normalization (Z = inf) when the integrand fails to decay on
// the grid tail.
inline StationaryLaw stationary_law(const RateFunction& R,
                                    const std::vector<double>& grid) {
  std::size_t n = grid.size();
  std::vector<double> rho(n), g(n);
  for (std::size_t j = 0; j < n; ++j) {
    rho[j] = R.rho(grid[j]);
    g[j] = grid[j] * std::exp(-rho[j]);
  }
  // Tail decay check on the last stretch of the grid.
  std::size_t k0 = n > 8 ? n - 8 : 0;
  double grow = 0.0;
  for (std::size_t j = k0 + 1; j < n; ++j) grow += (g[j] > g[j - 1] ? 1.0 : -1.0);
  double r_end = R.rate(grid.back());
  if (grow > 0.0 || !(r_end > 0.0))
    throw numerical_error(
        "stationary_law: normalization diverges (integrand not decaying; "
        "stationarity requires Z < inf)");
  std::vector<double> mass(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j)
    mass[j] = detail::exp_cell_mass(grid[j], grid[j + 1], rho[j], rho[j + 1]);
  double below = 0.5 * grid.front() * g.front();  // ~ int_0^x0 y e^{-rho(x0)}
  double tail = detail::const_rate_tail(grid.back(), rho.back(), r_end);
  StationaryLaw law;
  law.cdf = detail::assemble_cdf(grid, mass, below, tail, &law.Z);
  law.density.resize(n);
  for (std::size_t j = 0; j < n; ++j) law.density[j] = g[j] / law.Z;
  return law;
}

// ---------------------------------------------------------------------------
// Fixed-point solver for the size-biased limit law F of a selection rule:
// iterate F_{n+1}(x) = (1/Z_n) int_0^x y exp(-int_1^y psi(F_n)) dy, damped
// on the exponent table. Plain damping diverges for decreasing psi (min-k
// rules have a strongly unstable tail mode), so the damped step is wrapped
// in Anderson extrapolation with a box clamp and an oscillation safeguard.
// ---------------------------------------------------------------------------
struct SolveReport {
  int iterations = 0;
  double last_change = 0.0;
  double Z = 0.0;
};

namespace detail {

// int_1^x psi(F(u)) du on the grid, trapezoid anchored at 1.
inline std::vector<double> exponent_of(const std::vector<double>& grid,
                                       const ChoiceRule& rule,
                                       const std::vector<double>& fvals) {
  std::size_t n = grid.size();
  std::vector<double> pv(n), out(n);
  for (std::size_t j = 0; j < n; ++j) pv[j] = std::max(0.0, rule.psi(fvals[j]));
  out[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j)
    out[j] = out[j - 1] + 0.5 * (pv[j - 1] + pv[j]) * (grid[j] - grid[j - 1]);
  auto it1 = std::upper_bound(grid.begin(), grid.end(), 1.0);
  std::size_t j1 = std::min<std::size_t>(
      std::max<std::size_t>(static_cast<std::size_t>(it1 - grid.begin()), 1) - 1,
      n - 2);
  double h = 1.0 - grid[j1];
  double p1 = pv[j1] + (pv[j1 + 1] - pv[j1]) * h / (grid[j1 + 1] - grid[j1]);
  double at1 = out[j1] + 0.5 * (pv[j1] + p1) * h;
  for (double& v : out) v -= at1;
  return out;
}

// CDF of the density y e^{-rho(y)} / Z on the grid; false on overflow.
inline bool cdf_of_exponent(const std::vector<double>& grid,
                            const std::vector<double>& rho, double* Z,
                            GridCDF* out) {
  std::size_t n = grid.size();
  std::vector<double> mass(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j)
    mass[j] = exp_cell_mass(grid[j], grid[j + 1], rho[j], rho[j + 1]);
  double r_end = (rho[n - 1] - rho[n - 2]) / (grid[n - 1] - grid[n - 2]);
  double below = 0.5 * grid.front() * grid.front() * std::exp(-rho[0]);
  double tail = const_rate_tail(grid.back(), rho[n - 1],
                                std::max(r_end, 1.0 / grid.back()));
  try {
    *out = assemble_cdf(grid, mass, below, tail, Z);
  } catch (const numerical_error&) {
    return false;
  }
  return std::isfinite(*Z);
}

// Anderson candidate from iterate/residual history (least squares over
// residual differences, relative Tikhonov jitter); empty when singular.
inline std::vector<double> anderson_candidate(
    const std::vector<std::vector<double>>& hist_x,
    const std::vector<std::vector<double>>& hist_f, double beta) {
  std::size_t k = hist_x.size();
  std::size_t p = k - 1;
  std::size_t n = hist_x[0].size();
  std::vector<double> A(p * p), b(p), gamma(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l <= i; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += (hist_f[i][j] - hist_f[p][j]) * (hist_f[l][j] - hist_f[p][j]);
      A[i * p + l] = A[l * p + i] = s;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += (hist_f[i][j] - hist_f[p][j]) * hist_f[p][j];
    b[i] = -s;
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < p; ++i) tr += A[i * p + i];
  for (std::size_t i = 0; i < p; ++i) A[i * p + i] += 1e-12 * tr + 1e-300;
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(A[r * p + c]) > std::abs(A[piv * p + c])) piv = r;
    for (std::size_t cc = 0; cc < p; ++cc) std::swap(A[c * p + cc], A[piv * p + cc]);
    std::swap(b[c], b[piv]);
    if (A[c * p + c] == 0.0) return {};
    for (std::size_t r = c + 1; r < p; ++r) {
      double f = A[r * p + c] / A[c * p + c];
      for (std::size_t cc = c; cc < p; ++cc) A[r * p + cc] -= f * A[c * p + cc];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = p; c-- > 0;) {
    double s = b[c];
    for (std::size_t cc = c + 1; cc < p; ++cc) s -= A[c * p + cc] * gamma[cc];
    gamma[c] = s / A[c * p + c];
  }
  std::vector<double> theta(k);
  theta[p] = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    theta[i] = gamma[i];
    theta[p] -= gamma[i];
  }
  std::vector<double> cand(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      s += theta[i] * (hist_x[i][j] + beta * hist_f[i][j]);
    cand[j] = s;
  }
  return cand;
}

}  // namespace detail

inline GridCDF solve_psi_fixed_point(const ChoiceRule& rule,
                                     const std::vector<double>& grid,
                                     double tol = 1e-10, int max_iter = 500,
                                     SolveReport* report = nullptr) {
  if (!(tol >= 1e-12)) throw std::invalid_argument("solve: tol must be >= 1e-12");
  std::size_t n = grid.size();
  // Uniform-rule exponent, capped: weights below e^{-46} are zero anyway and
  // an uncapped start puts heavy-tailed rules through enormous transients.
  std::vector<double> rho(n);
  for (std::size_t j = 0; j < n; ++j) rho[j] = std::min(grid[j] - 1.0, 46.0);

  double Z = 0.0;
  GridCDF F;
  if (!detail::cdf_of_exponent(grid, rho, &Z, &F))
    throw numerical_error("solve: initial exponent not normalizable");

  const std::size_t depth = 4;
  const double beta = 0.5;
  std::vector<std::vector<double>> hist_x, hist_f;

  for (int it = 1; it <= max_iter; ++it) {
    auto target = detail::exponent_of(grid, rule, F.values());
    std::vector<double> resid(n);
    double rrel = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      resid[j] = target[j] - rho[j];
      rrel = std::max(rrel, std::abs(resid[j]) / (1.0 + std::abs(rho[j])));
    }
    hist_x.push_back(rho);
    hist_f.push_back(resid);
    if (hist_x.size() > depth) {
      hist_x.erase(hist_x.begin());
      hist_f.erase(hist_f.begin());
    }

    std::vector<double> cand;
    if (hist_x.size() >= 2) cand = detail::anderson_candidate(hist_x, hist_f, beta);
    if (!cand.empty()) {
      for (std::size_t j = 0; j < n; ++j) {
        double lo = std::min(rho[j], target[j]) - 10.0;
        double hi = std::max(rho[j], target[j]) + 10.0;
        cand[j] = std::clamp(cand[j], lo, hi);
      }
    } else {
      cand.resize(n);
      for (std::size_t j = 0; j < n; ++j) cand[j] = rho[j] + beta * resid[j];
    }

    double Zc;
    GridCDF Fc;
    if (!detail::cdf_of_exponent(grid, cand, &Zc, &Fc)) {
      for (std::size_t j = 0; j < n; ++j) cand[j] = rho[j] + beta * resid[j];
      if (!detail::cdf_of_exponent(grid, cand, &Zc, &Fc))
        throw numerical_error("solve: iteration left the normalizable region");
      hist_x.clear();
      hist_f.clear();
    }

    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      change = std::max(change, std::abs(Fc.values()[j] - F.values()[j]));
    rho.swap(cand);
    F = Fc;
    Z = Zc;

    if (change <= tol && rrel <= 1e-6) {
      if (F.tail_mass() > 0.2)
        throw numerical_error(
            "solve: normalization diverges (solution mass escapes the grid)");
      if (report) *report = SolveReport{it, change, Z};
      return F;
    }
  }
  throw numerical_error("solve: fixed-point iteration did not converge in " +
                        std::to_string(max_iter) + " iterations");
}

// Independent route: shooting on the ODE pair F' = xG, G' = -psi(F) G with
// G(0) free, bisected until the terminal mass (including a constant-rate
// tail estimate past the grid) hits 1. The decay of G is stiff at large x,
// so each log-x cell is advanced by an exponential step (exact for a
// cellwise-constant coefficient) with Simpson-averaged coefficients.
inline GridCDF solve_psi_shooting(const ChoiceRule& rule,
                                  const std::vector<double>& grid,
                                  double tol = 1e-9) {
  std::size_t n = grid.size();
  auto psi_at = [&](double F) { return std::max(0.0, rule.psi(std::clamp(F, 0.0, 1.0))); };
  auto terminal = [&](double g0, std::vector<double>* f_out) {
    double F = 0.5 * g0 * grid.front() * grid.front();  // F ~ g0 x^2/2 near 0
    double G = g0;
    if (f_out) (*f_out)[0] = F;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double xl = grid[j], xr = grid[j + 1];
      double h = std::log(xr / xl);
      double xm = std::sqrt(xl * xr);
      double a0 = xl * psi_at(F);
      // predictor values for the decay coefficient across the cell
      double fm = F + 0.5 * h * xl * xm * G * detail::em1_over(0.5 * a0 * h);
      double am = xm * psi_at(fm);
      double fr = F + h * xl * xr * G * detail::em1_over(am * h);
      double ar = xr * psi_at(fr);
      double decay = h / 6.0 * (a0 + 4.0 * am + ar);  // int x psi(F) ds
      double gr = G * std::exp(-decay);
      double gm = std::sqrt(G * gr);
      F += h / 6.0 * (xl * xl * G + 4.0 * xm * xm * gm + xr * xr * gr);
      G = gr;
      if (f_out) (*f_out)[j + 1] = F;
    }
    double xe = grid.back();
    double r = std::max(psi_at(F), 1.0 / xe);
    double total = F + std::max(G, 0.0) * (xe / r + 1.0 / (r * r));
    return std::isfinite(total) ? total : std::numeric_limits<double>::max();
  };

  // Bracket G(0): terminal mass is monotone increasing in g0; validated by
  // a coarse scan before bisecting.
  double lo = 1e-6, hi = 1e3;
  while (terminal(lo, nullptr) > 1.0 && lo > 1e-300) lo /= 16.0;
  while (terminal(hi, nullptr) < 1.0 && hi < 1e300) hi *= 16.0;
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 16; ++i) {
    double gmid = lo * std::pow(hi / lo, i / 16.0);
    double tm = terminal(gmid, nullptr);
    if (tm < prev - 1e-9)
      throw numerical_error("shooting: terminal mass not monotone in G(0)");
    prev = tm;
  }
  for (int i = 0; i < 200; ++i) {
    double mid = std::sqrt(lo * hi);
    if (terminal(mid, nullptr) < 1.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= tol * lo) break;
  }
  double g0 = std::sqrt(lo * hi);
  std::vector<double> f(n);
  terminal(g0, &f);
  for (double& v : f) v = std::clamp(v, 0.0, 1.0);
  for (std::size_t j = 1; j < n; ++j) f[j] = std::max(f[j], f[j - 1]);
  return GridCDF(grid, std::move(f));
}

// R = psi o F for a solved F.
inline RateFunction rate_from_solution(const ChoiceRule& rule, const GridCDF& F) {
  return RateFunction::psi_of(rule, F);
}

// ---------------------------------------------------------------------------
// Relative residual of the stationarity identity F'(x)/x = int_x^inf
// psi(F(z)) F'(z)/z dz, sup over interior grid points. F' by centered
// differences on the log grid; the above-grid part of the integral is
// estimated by the identity's own value at the last node.
// ---------------------------------------------------------------------------
inline double fixed_point_residual(const GridCDF& F, const ChoiceRule& rule) {
  const auto& x = F.grid();
  const auto& f = F.values();
  std::size_t n = x.size();
  std::vector<double> lhs(n);  // F'(x)/x
  for (std::size_t j = 1; j + 1 < n; ++j) {
    double df = (f[j + 1] - f[j - 1]) / (std::log(x[j + 1]) - std::log(x[j - 1]));
    lhs[j] = df / (x[j] * x[j]);
  }
  lhs[0] = lhs[1];
  lhs[n - 1] = (f[n - 1] - f[n - 2]) /
               (std::log(x[n - 1]) - std::log(x[n - 2])) / (x[n - 1] * x[n - 1]);
  std::vector<double> rhs(n);
  rhs[n - 1] = lhs[n - 1];  // tail estimate
  for (std::size_t j = n - 1; j > 0; --j) {
    double a = rule.psi(f[j - 1]) * lhs[j - 1];
    double b = rule.psi(f[j]) * lhs[j];
    rhs[j - 1] = rhs[j] + 0.5 * (a + b) * (x[j] - x[j - 1]);
  }
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (!(lhs[j] > 0.0)) continue;
    // skip nodes whose CDF increment is below double resolution: the
    // centered difference there is pure cancellation noise
    if (f[j + 1] - f[j - 1] < 1e-10) continue;
    worst = std::max(worst, std::abs(lhs[j] - rhs[j]) / lhs[j]);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tail fits. exp_linear: log(1-F) - log x ~ a - k x. power: log(1-F) ~ a -
// p log x. Window: grid points with 1-F in [lo, hi].
// ---------------------------------------------------------------------------
enum class TailForm { exp_linear, power };

struct TailFit {
  double decay = 0.0;      // k (exp_linear) or p (power)
  double intercept = 0.0;  // a
  double rms_residual = 0.0;
  int points = 0;
};

inline TailFit tail_fit(const GridCDF& F, TailForm form, double lo = 1e-8,
                        double hi = 1e-2) {
  const auto& x = F.grid();
  const auto& f = F.values();
  std::vector<double> ts, ys;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double s = 1.0 - f[j];
    if (s < lo || s > hi) continue;
    double y = std::log(s);
    if (form == TailForm::exp_linear) {
      ts.push_back(x[j]);
      ys.push_back(y - std::log(x[j]));
    } else {
      ts.push_back(std::log(x[j]));
      ys.push_back(y);
    }
  }
  if (ts.size() < 4)
    throw numerical_error("tail_fit: empty fit window (tail not resolved on grid)");
  double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
    stt += ts[i] * ts[i];
    sty += ts[i] * ys[i];
  }
  double slope = (n * sty - st * sy) / (n * stt - st * st);
  double a = (sy - slope * st) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double r = ys[i] - (a + slope * ts[i]);
    ss += r * r;
  }
  TailFit fit;
  fit.decay = -slope;
  fit.intercept = a;
  fit.rms_residual = std::sqrt(ss / n);
  fit.points = static_cast<int>(ts.size());
  return fit;
}

}  // namespace fragchoice
