#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fragchoice/errors.hpp"
#include "fragchoice/fixed_point.hpp"
#include "fragchoice/measures.hpp"
#include "fragchoice/rules.hpp"

namespace fragchoice {

// ---------------------------------------------------------------------------
// CDF-form evolution of the population-conservative growth-fragmentation
// dynamics: F_{t+dt}(x) = F_t(e^{-dt} x) + dt (e^{-dt} x)^2
// int_{e^{-dt} x}^inf R(z)/z dF_t(z). Transport is an exact index shift
// when dt is an integer multiple of the log-grid spacing (the default dt is
// one cell); otherwise monotone linear interpolation.
// ---------------------------------------------------------------------------

struct EvolutionState {
  double t = 0.0;
  GridCDF F;
  double mass_drift = 0.0;  // |F_t(x_max) - F_0(x_max)|
};

struct EvolveOptions {
  double dt = 0.0;          // <= 0: one log-grid cell
  int snapshot_stride = 1;  // record every k-th step (first/last always kept)
  double mass_drift_abort = 0.05;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<EvolutionState> states;
  double projected_mass = 0.0;  // total monotone-projection clippings

  const EvolutionState& front() const { return states.front(); }
  const EvolutionState& back() const { return states.back(); }
};

namespace detail {

// One evolution step on raw values; rate_over_x holds R(x_i)/x_i.
// Returns the clipped mass from the monotone projection.
inline double evolve_step(const std::vector<double>& x,
                          const std::vector<double>& rate_over_x,
                          std::vector<double>& f, double dt, int shift_cells,
                          double log_step) {
  std::size_t n = x.size();
  // Backward cumulative of R(z)/z dF, trapezoid on cell masses.
  static thread_local std::vector<double> gain, fnew;
  gain.assign(n, 0.0);
  for (std::size_t j = n - 1; j > 0; --j) {
    double df = f[j] - f[j - 1];
    gain[j - 1] = gain[j] + 0.5 * (rate_over_x[j - 1] + rate_over_x[j]) * df;
  }
  fnew.resize(n);
  if (shift_cells >= 0) {
    // exact log-grid shift: e^{-dt} x_i = x_{i-m}
    for (std::size_t i = 0; i < n; ++i) {
      double shifted, gains;
      if (i >= static_cast<std::size_t>(shift_cells)) {
        std::size_t j = i - static_cast<std::size_t>(shift_cells);
        shifted = f[j];
        gains = dt * x[j] * x[j] * gain[j];
      } else {
        // below-grid: quadratic CDF extension, gain frozen at the edge
        double y = x[i] * std::exp(-shift_cells * log_step);
        double r = y / x[0];
        shifted = f[0] * r * r;
        gains = dt * y * y * gain[0];
      }
      fnew[i] = shifted + gains;
    }
  } else {
    double shrink = std::exp(-dt);
    for (std::size_t i = 0; i < n; ++i) {
      double y = x[i] * shrink;
      double shifted, gains;
      if (y <= x[0]) {
        double r = y / x[0];
        shifted = f[0] * r * r;
        gains = dt * y * y * gain[0];
      } else {
        auto it = std::upper_bound(x.begin(), x.end(), y);
        std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
        if (j > n - 2) j = n - 2;
        double t = (y - x[j]) / (x[j + 1] - x[j]);
        shifted = f[j] + t * (f[j + 1] - f[j]);
        gains = dt * y * y * (gain[j] + t * (gain[j + 1] - gain[j]));
      }
      fnew[i] = shifted + gains;
    }
  }
  // Monotone projection; clipping magnitude is reported, not hidden.
  double clipped = 0.0;
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fnew[i] < run) {
      clipped += run - fnew[i];
      fnew[i] = run;
    }
    run = fnew[i];
  }
  f.swap(fnew);
  return clipped;
}

inline std::vector<double> rate_over_x_table(const RateFunction& R,
                                             const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = R.rate(x[i]) / x[i];
  return out;
}

inline Trajectory evolve_impl(const std::vector<double>& x,
                              const std::vector<double>& rate_over_x,
                              const GridCDF& F0, double T, EvolveOptions opt) {
  double log_step = std::log(x[1] / x[0]);
  // default: one log-grid cell (exact-shift transport); capped at 0.01 on
  // coarse grids, where transport falls back to interpolation
  double dt = opt.dt > 0.0 ? opt.dt : std::min(log_step, 0.01);
  if (dt > 0.01 + 1e-12)
    throw std::invalid_argument("evolve: dt must be <= 0.01");
  // exact-shift mode when dt is an integer multiple of the cell width
  double cells = dt / log_step;
  int shift_cells = -1;
  if (std::abs(cells - std::round(cells)) < 1e-9 && std::round(cells) >= 1.0)
    shift_cells = static_cast<int>(std::round(cells));

  std::vector<double> f(F0.size());
  for (std::size_t i = 0; i < x.size(); ++i) f[i] = F0.value(x[i]);

  Trajectory traj;
  traj.dt = dt;
  double f_end0 = f.back();
  traj.states.push_back({0.0, GridCDF(x, f, F0.tail_mass()), 0.0});

  auto steps = static_cast<std::int64_t>(std::ceil(T / dt - 1e-9));
  double t = 0.0;
  for (std::int64_t s = 1; s <= steps; ++s) {
    double step_dt = dt;
    int sc = shift_cells;
    if (s == steps) {  // final partial step
      step_dt = T - t;
      if (step_dt <= 1e-14) break;
      if (std::abs(step_dt - dt) > 1e-12 * dt) sc = -1;
    }
    traj.projected_mass += evolve_step(x, rate_over_x, f, step_dt, sc, log_step);
    t += step_dt;
    double drift = std::abs(f.back() - f_end0);
    if (drift > opt.mass_drift_abort)
      throw numerical_error("evolve: mass drift " + std::to_string(drift) +
                            " exceeds abort threshold (discretization breakdown)");
    if (s % opt.snapshot_stride == 0 || s == steps)
      traj.states.push_back({t, GridCDF(x, f, F0.tail_mass()), drift});
  }
  return traj;
}

}  // namespace detail

inline Trajectory evolve_rate(const RateFunction& R, const GridCDF& F0,
                              double T, EvolveOptions opt = {}) {
  const auto& x = F0.grid();
  return detail::evolve_impl(x, detail::rate_over_x_table(R, x), F0, T, opt);
}

// Pair-operator evolution against a constant absolutely continuous drive:
// the gain weights reduce to psi(drive(x)), so this shares the stepping
// kernel with evolve_rate.
inline Trajectory evolve_pair_constant(const GridCDF& drive,
                                       const ChoiceRule& rule,
                                       const GridCDF& G0, double T,
                                       EvolveOptions opt = {}) {
  const auto& x = G0.grid();
  std::vector<double> rate_over_x(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    rate_over_x[i] = std::max(0.0, rule.psi(drive.value(x[i]))) / x[i];
  return detail::evolve_impl(x, rate_over_x, G0, T, opt);
}

// ---------------------------------------------------------------------------
// Atomic pair-operator machinery (the Radon-Nikodym route). The gain
// integral against an atomic drive F uses the per-atom jump ratios of
// Psi(F), not psi(F): gain(y) = sum_{atoms z > y} rn(z) dG(z) / z.
// ---------------------------------------------------------------------------
inline double pair_gain_atomic(const StepCDF& drive, const ChoiceRule& rule,
                               const StepCDF& G, double y) {
  auto rn = rn_derivative_psi(drive, rule);
  double s = 0.0;
  for (std::size_t i = 0; i < drive.size(); ++i) {
    double z = drive.locations()[i];
    if (z <= y) continue;
    double dg = G.value(z) - G.left_value(z);
    if (dg > 0.0) s += rn[i] * dg / z;
  }
  return s;
}

// One explicit step from an atomic state sampled onto a grid. G0's atoms
// must be carried by the drive.
inline GridCDF pair_step_atomic(const StepCDF& drive, const ChoiceRule& rule,
                                const StepCDF& G0, double dt,
                                const std::vector<double>& out_grid) {
  for (double z : G0.locations())
    if (drive.value(z) - drive.left_value(z) <= 0.0)
      throw std::invalid_argument(
          "pair_step_atomic: G0 atom not carried by the drive");
  std::vector<double> f(out_grid.size());
  double shrink = std::exp(-dt);
  for (std::size_t i = 0; i < out_grid.size(); ++i) {
    double y = out_grid[i] * shrink;
    f[i] = G0.value(y) + dt * y * y * pair_gain_atomic(drive, rule, G0, y);
  }
  for (std::size_t i = 1; i < f.size(); ++i)
    f[i] = std::min(std::max(f[i], f[i - 1]), 1.0);
  return GridCDF(out_grid, std::move(f));
}

// ---------------------------------------------------------------------------
// Generator tooling. Test functions are (values, derivative) pairs on a
// grid, compactly supported in the interior.
// ---------------------------------------------------------------------------
struct TestFunction {
  std::vector<double> f, df;
};

// Smooth bump supported on [a,b] (log coordinates), peak value 1.
inline TestFunction log_bump(const std::vector<double>& grid, double a,
                             double b) {
  if (!(a > grid.front()) || !(b < grid.back()) || !(b > a))
    throw std::invalid_argument("log_bump: support must lie inside the grid");
  TestFunction tf;
  tf.f.assign(grid.size(), 0.0);
  tf.df.assign(grid.size(), 0.0);
  double la = std::log(a), lb = std::log(b);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s = 2.0 * (std::log(grid[i]) - la) / (lb - la) - 1.0;
    if (s <= -1.0 || s >= 1.0) continue;
    double w = 1.0 - s * s;
    double val = std::exp(1.0 - 1.0 / w);
    tf.f[i] = val;
    tf.df[i] = val * (-2.0 * s / (w * w)) * (2.0 / (grid[i] * (lb - la)));
  }
  return tf;
}

namespace detail {

inline void require_interior_support(const std::vector<double>& grid,
                                     const TestFunction& tf) {
  if (tf.f.size() != grid.size() || tf.df.size() != grid.size())
    throw std::invalid_argument("test function not sampled on this grid");
  if (tf.f.front() != 0.0 || tf.f.back() != 0.0 || tf.df.front() != 0.0 ||
      tf.df.back() != 0.0)
    throw std::invalid_argument(
        "test function support touches the grid boundary");
}

// Cumulative trapezoid of 2 u f(u) from the grid start.
inline std::vector<double> inner_moment(const std::vector<double>& grid,
                                        const std::vector<double>& f) {
  std::vector<double> m(grid.size());
  m[0] = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j)
    m[j] = m[j - 1] + (grid[j] - grid[j - 1]) *
                          (grid[j - 1] * f[j - 1] + grid[j] * f[j]);
  return m;
}

}  // namespace detail

// (Lf)(x) = x f'(x) + x R(x) [ int_0^x (2u/x^2) f(u) du - f(x) ].
inline std::vector<double> apply_generator(const RateFunction& R,
                                           const std::vector<double>& grid,
                                           const TestFunction& tf) {
  detail::require_interior_support(grid, tf);
  auto m = detail::inner_moment(grid, tf.f);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid[i];
    out[i] = x * tf.df[i] +
             x * R.rate(x) * (m[i] / (x * x) - tf.f[i]);
  }
  return out;
}

// (Bf)(x) = x f'(x) - x R(x) f(x): growth plus killing.
inline std::vector<double> apply_growth_kill(const RateFunction& R,
                                             const std::vector<double>& grid,
                                             const TestFunction& tf) {
  detail::require_interior_support(grid, tf);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid[i];
    out[i] = x * tf.df[i] - x * R.rate(x) * tf.f[i];
  }
  return out;
}

// (Kf)(x) = x R(x) int_0^x (2u/x^2) f(u) du: the bounded gain part.
inline std::vector<double> apply_frag_gain(const RateFunction& R,
                                           const std::vector<double>& grid,
                                           const TestFunction& tf) {
  detail::require_interior_support(grid, tf);
  auto m = detail::inner_moment(grid, tf.f);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid[i];
    out[i] = R.rate(x) * m[i] / x;
  }
  return out;
}

// L1(pi) norm of grid values, trapezoid against the stationary density.
inline double l1_pi_norm(const StationaryLaw& pi, std::span<const double> v) {
  const auto& x = pi.cdf.grid();
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j)
    s += 0.5 * (x[j + 1] - x[j]) *
         (std::abs(v[j]) * pi.density[j] + std::abs(v[j + 1]) * pi.density[j + 1]);
  return s;
}

// Closed-form resolvent of the growth-kill part: f(x) = x^{1+lambda} /
// pi'(x) * int_x^inf g(y) y^{-(2+lambda)} pi(dy), by backward cumulative
// trapezoid.
inline std::vector<double> growth_kill_resolvent(const StationaryLaw& pi,
                                                 std::span<const double> g,
                                                 double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("resolvent: lambda must be > 0");
  const auto& x = pi.cdf.grid();
  std::size_t n = x.size();
  std::vector<double> integ(n), out(n);
  integ[n - 1] = 0.0;
  auto h = [&](std::size_t j) {
    return g[j] * std::pow(x[j], -(2.0 + lambda)) * pi.density[j];
  };
  for (std::size_t j = n - 1; j > 0; --j)
    integ[j - 1] = integ[j] + 0.5 * (x[j] - x[j - 1]) * (h(j - 1) + h(j));
  for (std::size_t j = 0; j < n; ++j) {
    double dens = std::max(pi.density[j], 1e-300);
    out[j] = std::pow(x[j], 1.0 + lambda) / dens * integ[j];
  }
  return out;
}

// ||(lambda - B) f - g||_{L1(pi)} with f' from centered differences.
inline double resolvent_residual(const RateFunction& R, const StationaryLaw& pi,
                                 std::span<const double> f,
                                 std::span<const double> g, double lambda) {
  const auto& x = pi.cdf.grid();
  std::size_t n = x.size();
  std::vector<double> resid(n, 0.0);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    double df = (f[j + 1] - f[j - 1]) / (x[j + 1] - x[j - 1]);
    resid[j] = lambda * f[j] - x[j] * df + x[j] * R.rate(x[j]) * f[j] - g[j];
  }
  return l1_pi_norm(pi, resid);
}

// Pairing (dF, g) by trapezoid on cell masses.
inline double pair_measure(const GridCDF& F, std::span<const double> g) {
  const auto& x = F.grid();
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    double df = F.values()[j + 1] - F.values()[j];
    s += 0.5 * (g[j] + g[j + 1]) * df;
  }
  return s;
}

// | (mu_T, f) - (mu_0, f) - sum_s dt (mu_s, Lf) |, left-endpoint rule over
// a stride-1 trajectory.
inline double weak_form_residual(const RateFunction& R, const Trajectory& traj,
                                 const TestFunction& tf) {
  if (traj.states.size() < 2) return 0.0;
  const auto& grid = traj.states.front().F.grid();
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    double gap = traj.states[k].t - traj.states[k - 1].t;
    if (gap > traj.dt * (1.0 + 1e-6))
      throw std::invalid_argument(
          "weak_form_residual: trajectory must be recorded at every step");
  }
  auto lf = apply_generator(R, grid, tf);
  double time_integral = 0.0;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    double dt = traj.states[k + 1].t - traj.states[k].t;
    time_integral += dt * pair_measure(traj.states[k].F, lf);
  }
  double lhs = pair_measure(traj.states.back().F, tf.f) -
               pair_measure(traj.states.front().F, tf.f);
  return std::abs(lhs - time_integral);
}

}  // namespace fragchoice
