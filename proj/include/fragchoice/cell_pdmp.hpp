#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fragchoice/fixed_point.hpp"
#include "fragchoice/measures.hpp"
#include "fragchoice/rng.hpp"
#include "fragchoice/util.hpp"

namespace fragchoice {

// Survivor function of the first jump from z: exp(-int_z^{z e^t} R).
inline double survivor(const RateFunction& R, double z, double t) {
  if (!(z > 0.0) || !(t >= 0.0))
    throw std::invalid_argument("survivor: need z > 0, t >= 0");
  return std::exp(-(R.rho(z * std::exp(t)) - R.rho(z)));
}

// Jump waiting time from z given a fixed Exp(1) draw e: the survivor
// function is inverted exactly through rho. Returns +inf when the clock
// outlasts the total remaining rate (no further jump ever); that is a
// first-class outcome, not an error.
inline double jump_time_from_exp(const RateFunction& R, double z, double e) {
  if (!(z > 0.0)) throw std::invalid_argument("jump time: z must be > 0");
  double rz = R.rho(z);
  double sup = R.rho_sup();
  if (sup - rz <= e) return std::numeric_limits<double>::infinity();
  double target = R.rho_inverse(rz + e);
  double tau = std::log(target / z);
  return tau > 0.0 ? tau : 0.0;
}

inline double sample_jump_time(const RateFunction& R, double z, Rng& rng) {
  return jump_time_from_exp(R, z, rng.exponential());
}

struct CellGuards {
  std::int64_t max_jumps = 1'000'000;
  double x_floor = 1e-12;
};

struct CellEvent {
  double tau;  // jump time
  double J;    // multiplicative factor in (0,1)
  double Y;    // post-jump value
};

// One trajectory: deterministic flow x e^t between jumps, multiplicative
// down-jumps with density 2u. Guard trips (value below x_floor, or jump
// budget exhausted) are recorded outcomes standing in for finite
// accumulation times.
struct CellPath {
  double x0 = 0.0;
  double horizon = 0.0;
  std::vector<CellEvent> events;
  bool absorbed = false;
  double absorption_time = std::numeric_limits<double>::infinity();
  bool exploded = false;  // no further jump ever (tau = inf drawn)
  double final_value = 0.0;

  // X_t, exact piecewise evaluation.
  double value_at(double t) const {
    if (absorbed && t >= absorption_time) return 0.0;
    double y = x0, tau = 0.0;
    for (const CellEvent& ev : events) {
      if (t < ev.tau) break;
      y = ev.Y;
      tau = ev.tau;
    }
    return y * std::exp(t - tau);
  }
};

inline CellPath simulate_path(const RateFunction& R, double x0, double T,
                              Rng& rng, CellGuards guards = {}) {
  if (!(x0 > 0.0) || !(T >= 0.0))
    throw std::invalid_argument("simulate_path: need x0 > 0, T >= 0");
  CellPath path;
  path.x0 = x0;
  path.horizon = T;
  double y = x0, tau = 0.0;
  while (true) {
    double wait = sample_jump_time(R, y, rng);
    if (wait == std::numeric_limits<double>::infinity()) {
      path.exploded = true;
      break;
    }
    double tnext = tau + wait;
    if (tnext >= T) break;
    double J = std::sqrt(rng.uniform_open());
    y = y * std::exp(wait) * J;
    tau = tnext;
    path.events.push_back({tau, J, y});
    if (y < guards.x_floor ||
        static_cast<std::int64_t>(path.events.size()) >= guards.max_jumps) {
      path.absorbed = true;
      path.absorption_time = tau;
      break;
    }
  }
  path.final_value = path.absorbed ? 0.0 : y * std::exp(T - tau);
  return path;
}

// ---------------------------------------------------------------------------
// Ensembles. Initial condition: a point mass or a sampler over a CDF.
// Replica i uses substream (master_seed, i); results are independent of any
// parallel execution order.
// ---------------------------------------------------------------------------
struct EnsembleResult {
  std::vector<std::vector<double>> values;  // [horizon][path]
  std::int64_t absorbed = 0;
  std::int64_t exploded = 0;
  std::vector<std::int32_t> jump_counts;   // per path
  std::vector<char> absorbed_flags, exploded_flags;
};

using InitSampler = std::function<double(Rng&)>;

inline InitSampler point_init(double x) {
  return [x](Rng&) { return x; };
}

inline InitSampler cdf_init(const GridCDF& cdf) {
  return [&cdf](Rng& rng) { return cdf.sample(rng); };
}

// Streaming simulation recording X at several ascending horizons without
// storing events. Path i uses substream (master_seed, i) and writes to its
// own slots, so results do not depend on the worker count.
inline EnsembleResult marginal_ensemble(const RateFunction& R,
                                        const InitSampler& init,
                                        std::span<const double> horizons,
                                        std::int64_t n_paths,
                                        std::uint64_t master_seed,
                                        CellGuards guards = {},
                                        int threads = 1) {
  if (n_paths < 1) throw std::invalid_argument("marginal_ensemble: need paths >= 1");
  EnsembleResult out;
  out.values.assign(horizons.size(),
                    std::vector<double>(static_cast<std::size_t>(n_paths)));
  out.jump_counts.assign(static_cast<std::size_t>(n_paths), 0);
  out.absorbed_flags.assign(static_cast<std::size_t>(n_paths), 0);
  out.exploded_flags.assign(static_cast<std::size_t>(n_paths), 0);
  auto& absorbed_flags = out.absorbed_flags;
  auto& exploded_flags = out.exploded_flags;
  parallel_for(n_paths, threads, [&](std::int64_t i) {
    Rng rng = Rng::substream(master_seed, static_cast<std::uint64_t>(i));
    double y = init(rng);
    double tau = 0.0;
    std::size_t h = 0;
    std::int32_t jumps = 0;
    bool absorbed = false, exploded = false;
    auto idx = static_cast<std::size_t>(i);
    while (h < horizons.size()) {
      double wait = absorbed ? std::numeric_limits<double>::infinity()
                             : sample_jump_time(R, y, rng);
      double tnext = tau + wait;
      while (h < horizons.size() && horizons[h] < tnext) {
        out.values[h][idx] = absorbed ? 0.0 : y * std::exp(horizons[h] - tau);
        ++h;
      }
      if (h >= horizons.size()) break;
      if (wait == std::numeric_limits<double>::infinity()) {
        if (!absorbed) exploded = true;
        while (h < horizons.size()) {
          out.values[h][idx] = absorbed ? 0.0 : y * std::exp(horizons[h] - tau);
          ++h;
        }
        break;
      }
      double J = std::sqrt(rng.uniform_open());
      y = y * std::exp(wait) * J;
      tau = tnext;
      ++jumps;
      if (y < guards.x_floor || jumps >= guards.max_jumps) absorbed = true;
    }
    out.jump_counts[idx] = jumps;
    absorbed_flags[idx] = absorbed ? 1 : 0;
    exploded_flags[idx] = exploded ? 1 : 0;
  });
  for (std::int64_t i = 0; i < n_paths; ++i) {
    out.absorbed += absorbed_flags[static_cast<std::size_t>(i)];
    out.exploded += exploded_flags[static_cast<std::size_t>(i)];
  }
  return out;
}

// First passage to x_target (reached only along the upward flow). Returns
// the hit time, or nullopt on timeout at T_max; timeouts are reported by
// the caller, never dropped.
inline std::optional<double> hitting_time(const RateFunction& R, double y0,
                                          double x_target, Rng& rng,
                                          double T_max,
                                          CellGuards guards = {}) {
  if (!(y0 > 0.0) || !(x_target > 0.0))
    throw std::invalid_argument("hitting_time: need positive levels");
  double y = y0, tau = 0.0;
  std::int64_t jumps = 0;
  while (tau < T_max) {
    double wait = sample_jump_time(R, y, rng);
    if (y <= x_target) {
      double hit = tau + std::log(x_target / y);
      if (hit > 0.0 && hit < tau + wait && hit <= T_max) return hit;
    }
    if (wait == std::numeric_limits<double>::infinity()) return std::nullopt;
    tau += wait;
    double J = std::sqrt(rng.uniform_open());
    y = y * std::exp(wait) * J;
    if (y < guards.x_floor || ++jumps >= guards.max_jumps) return std::nullopt;
  }
  return std::nullopt;
}

// Fraction of [0, horizon] the path spends in [a, b], computed exactly on
// the flow segments (time in the set during a segment from Y is the overlap
// of [log(a/Y), log(b/Y)] with the segment).
inline double occupation_average(const CellPath& path, double a, double b) {
  if (!(a >= 0.0) || !(b > a))
    throw std::invalid_argument("occupation_average: need 0 <= a < b");
  double T = path.horizon;
  if (!(T > 0.0)) return 0.0;
  double time_in = 0.0;
  double y = path.x0, tau = 0.0;
  auto segment = [&](double seg_start, double seg_end, double start_val) {
    double lo = a > 0.0 ? std::log(a / start_val) : -std::numeric_limits<double>::infinity();
    double hi = std::log(b / start_val);
    double s0 = std::max(0.0, lo);
    double s1 = std::min(seg_end - seg_start, hi);
    if (s1 > s0) time_in += s1 - s0;
  };
  for (const CellEvent& ev : path.events) {
    double seg_end = std::min(ev.tau, T);
    if (seg_end > tau) segment(tau, seg_end, y);
    if (ev.tau >= T) {
      tau = T;
      break;
    }
    y = ev.Y;
    tau = ev.tau;
  }
  if (path.absorbed && path.absorption_time <= T) {
    if (a == 0.0) time_in += T - path.absorption_time;
  } else if (tau < T) {
    segment(tau, T, y);
  }
  return time_in / T;
}

}  // namespace fragchoice
