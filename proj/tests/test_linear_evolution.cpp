#include <catch2/catch_amalgamated.hpp>

#include "fragchoice/cell_pdmp.hpp"
#include "fragchoice/linear_evolution.hpp"

using namespace fragchoice;

namespace {

const std::vector<double>& grid4k() {
  static auto g = log_grid(1e-4, 50.0, 4096);
  return g;
}

GridCDF gamma_cdf(double rate) {
  std::vector<double> f(grid4k().size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double bx = rate * grid4k()[i];
    f[i] = 1.0 - (1.0 + bx) * std::exp(-bx);
  }
  return GridCDF(grid4k(), std::move(f));
}

// random compactly supported piecewise-linear test values on the grid
TestFunction random_pwl(Rng& rng, const std::vector<double>& grid) {
  TestFunction tf;
  tf.f.assign(grid.size(), 0.0);
  tf.df.assign(grid.size(), 0.0);
  std::size_t lo = grid.size() / 8 + static_cast<std::size_t>(rng.uniform01() * grid.size() / 8);
  std::size_t hi = grid.size() / 2 + static_cast<std::size_t>(rng.uniform01() * grid.size() / 4);
  std::size_t knots = 6;
  std::vector<double> kv(knots);
  double mean = 0.0;
  for (auto& v : kv) {
    v = 2.0 * rng.uniform01() - 1.0;
    mean += v / knots;
  }
  for (auto& v : kv) v -= mean;  // mixed signs keep the norm bounds strict
  for (std::size_t i = lo; i <= hi; ++i) {
    double t = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
    double pos = t * (knots - 1);
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), knots - 2);
    double w = pos - k;
    double edge = std::min(t, 1.0 - t) * 4.0;  // taper to zero at the support ends
    tf.f[i] = (kv[k] * (1.0 - w) + kv[k + 1] * w) * std::min(1.0, edge);
  }
  for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    tf.df[i] = (tf.f[i + 1] - tf.f[i - 1]) / (grid[i + 1] - grid[i - 1]);
  tf.f.front() = tf.f.back() = tf.df.front() = tf.df.back() = 0.0;
  return tf;
}

}  // namespace

TEST_CASE("pure transport is an exact index shift", "[evolution]") {
  auto R0 = RateFunction::constant(0.0);
  auto F0 = gamma_cdf(2.0);
  EvolveOptions opt;
  opt.snapshot_stride = 1 << 20;
  auto traj = evolve_rate(R0, F0, 1.0, opt);
  const auto& st = traj.states.back();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid4k().size(); ++i)
    worst = std::max(worst, std::abs(st.F.values()[i] -
                                     F0.value(grid4k()[i] * std::exp(-st.t))));
  CHECK(worst < 1e-6);
  CHECK(traj.projected_mass == 0.0);
}

TEST_CASE("the stationary law is a fixed profile of the evolution", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto F0 = gamma_cdf(1.0);
  EvolveOptions opt;
  opt.snapshot_stride = 20;
  auto traj = evolve_rate(R1, F0, 1.0, opt);
  double worst = 0.0;
  for (const auto& st : traj.states)
    for (std::size_t i = 0; i < grid4k().size(); ++i)
      worst = std::max(worst, std::abs(st.F.values()[i] - F0.values()[i]));
  CHECK(worst <= 5.0 * traj.dt);

  // first-order accuracy: halving the step halves the defect
  auto g8 = log_grid(1e-4, 50.0, 8192);
  std::vector<double> f8(g8.size());
  for (std::size_t i = 0; i < g8.size(); ++i)
    f8[i] = 1.0 - (1.0 + g8[i]) * std::exp(-g8[i]);
  GridCDF F8(g8, f8);
  EvolveOptions opt8;
  opt8.snapshot_stride = 40;
  auto traj8 = evolve_rate(R1, F8, 1.0, opt8);
  double worst8 = 0.0;
  for (const auto& st : traj8.states)
    for (std::size_t i = 0; i < g8.size(); ++i)
      worst8 = std::max(worst8, std::abs(st.F.values()[i] - f8[i]));
  CHECK(worst8 < 0.65 * worst);
}

TEST_CASE("trajectories relax to the stationary law", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, grid4k());
  EvolveOptions opt;
  opt.snapshot_stride = 500;
  auto traj = evolve_rate(R1, gamma_cdf(2.0), 8.0, opt);
  CHECK(dist_tv(traj.states.back().F, law.cdf) < 0.01);
  // mass conservation diagnostic
  for (const auto& st : traj.states)
    CHECK(std::abs(st.F.values().back() - 1.0) <=
          gamma_cdf(2.0).tail_mass() + 5.0 * traj.dt + 1e-12);
}

TEST_CASE("deterministic evolution matches the particle ensemble", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto F0 = gamma_cdf(2.0);
  EvolveOptions opt;
  opt.snapshot_stride = 1 << 20;
  auto traj = evolve_rate(R1, F0, 2.0, opt);
  const std::int64_t M = 50000;
  std::vector<double> horizons{2.0};
  auto mc = marginal_ensemble(R1, cdf_init(F0), horizons, M, 606);
  double tv = dist_tv(mc.values[0], traj.states.back().F);
  INFO("binned tv " << tv);
  CHECK(tv < 0.035);  // noise floor ~0.025 at 200 bins, M = 5e4
}

TEST_CASE("pair evolution against a constant drive reduces to a rate", "[evolution]") {
  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), grid4k());
  auto G0 = gamma_cdf(2.0);
  EvolveOptions opt;
  opt.snapshot_stride = 100;
  auto via_pair = evolve_pair_constant(F2, ChoiceRule::max_k(2), G0, 1.0, opt);
  auto via_rate = evolve_rate(rate_from_solution(ChoiceRule::max_k(2), F2), G0, 1.0, opt);
  REQUIRE(via_pair.states.size() == via_rate.states.size());
  double worst = 0.0;
  for (std::size_t s = 0; s < via_pair.states.size(); ++s)
    for (std::size_t i = 0; i < grid4k().size(); ++i)
      worst = std::max(worst, std::abs(via_pair.states[s].F.values()[i] -
                                       via_rate.states[s].F.values()[i]));
  CHECK(worst < 1e-8);
}

TEST_CASE("atomic pair gain uses jump ratios, not the naive density", "[evolution]") {
  StepCDF drive({{1.0 / 3.0, 0.5}, {2.0 / 3.0, 0.5}});
  auto rule = ChoiceRule::max_k(2);
  // self-drive: dG/dF = 1
  double lo = pair_gain_atomic(drive, rule, drive, 0.2);
  double mid = pair_gain_atomic(drive, rule, drive, 0.5);
  double hi = pair_gain_atomic(drive, rule, drive, 0.9);
  // hand-computed: rn = {1/2, 3/2}; masses 1/2 at 1/3 and 2/3
  CHECK(lo == Catch::Approx(0.5 * 0.5 * 3.0 + 1.5 * 0.5 * 1.5));   // 1.875
  CHECK(mid == Catch::Approx(1.5 * 0.5 * 1.5));                    // 1.125
  CHECK(hi == Catch::Approx(0.0));
  // the naive psi(F) version would give 3.0 and 1.5 instead
  double naive_lo = rule.psi(0.5) * 0.5 * 3.0 + rule.psi(1.0) * 0.5 * 1.5;
  double naive_mid = rule.psi(1.0) * 0.5 * 1.5;
  CHECK(naive_lo == Catch::Approx(3.0));
  CHECK(naive_mid == Catch::Approx(1.5));
  CHECK(std::abs(lo - naive_lo) == Catch::Approx(1.125));
  CHECK(std::abs(mid - naive_mid) == Catch::Approx(0.375));

  // one explicit step embeds the gain at the transported point
  double dt = 0.005;
  auto out_grid = log_grid(1e-3, 4.0, 1024);
  auto G1 = pair_step_atomic(drive, rule, drive, dt, out_grid);
  double x = 0.5;
  double y = x * std::exp(-dt);
  double expect = drive.value(y) + dt * y * y * 1.125;
  CHECK(G1.value(x) == Catch::Approx(expect).margin(1e-4));

  // identity rule: gain is the plain atom sum of dG/z
  auto rn_id = pair_gain_atomic(drive, ChoiceRule::uniform(), drive, 0.2);
  CHECK(rn_id == Catch::Approx(0.5 * 3.0 + 0.5 * 1.5));

  StepCDF stray({{0.4, 1.0}});
  CHECK_THROWS_AS(pair_step_atomic(drive, rule, stray, dt, out_grid),
                  std::invalid_argument);
}

TEST_CASE("generator splits into growth-kill and gain parts", "[evolution]") {
  auto R = RateFunction::constant(1.0);
  auto tf = log_bump(grid4k(), 0.05, 5.0);
  auto lf = apply_generator(R, grid4k(), tf);
  auto bf = apply_growth_kill(R, grid4k(), tf);
  auto kf = apply_frag_gain(R, grid4k(), tf);
  for (std::size_t i = 0; i < grid4k().size(); ++i)
    CHECK(lf[i] == Catch::Approx(bf[i] + kf[i]).margin(1e-12));

  // R = 0: pure growth term
  auto R0 = RateFunction::constant(0.0);
  auto l0 = apply_generator(R0, grid4k(), tf);
  auto k0 = apply_frag_gain(R0, grid4k(), tf);
  for (std::size_t i = 0; i < grid4k().size(); ++i) {
    CHECK(l0[i] == Catch::Approx(grid4k()[i] * tf.df[i]).margin(1e-14));
    CHECK(k0[i] == 0.0);
  }

  // nonnegative f gives nonnegative gain
  for (double v : kf) CHECK(v >= 0.0);

  // inner moment against an independent quadrature at one interior point
  std::size_t probe = 2600;
  double x = grid4k()[probe];
  double fine = 0.0;
  {
    int m = 200000;
    for (int i = 0; i < m; ++i) {
      double u = (i + 0.5) * x / m;
      // piecewise-linear interpolation of the bump values
      auto it = std::upper_bound(grid4k().begin(), grid4k().end(), u);
      std::size_t j = std::min<std::size_t>(
          std::max<std::ptrdiff_t>(it - grid4k().begin(), 1) - 1, grid4k().size() - 2);
      double t = (u - grid4k()[j]) / (grid4k()[j + 1] - grid4k()[j]);
      double fu = tf.f[j] + t * (tf.f[j + 1] - tf.f[j]);
      fine += 2.0 * u * fu * (x / m);
    }
  }
  double expect = x * tf.df[probe] + x * 1.0 * (fine / (x * x) - tf.f[probe]);
  CHECK(lf[probe] == Catch::Approx(expect).margin(1e-6));

  // support must stay inside the grid
  TestFunction bad = tf;
  bad.f.front() = 0.1;
  CHECK_THROWS_AS(apply_generator(R, grid4k(), bad), std::invalid_argument);
}

TEST_CASE("gain operator is bounded by twice the pi norm", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, grid4k());
  Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    auto tf = random_pwl(rng, grid4k());
    auto kf = apply_frag_gain(R1, grid4k(), tf);
    CHECK(l1_pi_norm(law, kf) <= 2.0 * l1_pi_norm(law, tf.f) + 1e-12);
  }
  // sharpness: equality for nonnegative f (the Fubini step is an identity)
  auto bump = log_bump(grid4k(), 0.1, 3.0);
  auto kb = apply_frag_gain(R1, grid4k(), bump);
  CHECK(l1_pi_norm(law, kb) ==
        Catch::Approx(2.0 * l1_pi_norm(law, bump.f)).epsilon(1e-4));
}

TEST_CASE("growth-kill resolvent", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, grid4k());
  Rng rng(15);
  for (double lambda : {0.5, 1.0, 5.0}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto tf = random_pwl(rng, grid4k());
      auto f = growth_kill_resolvent(law, tf.f, lambda);
      CHECK(l1_pi_norm(law, f) <=
            l1_pi_norm(law, tf.f) / (2.0 + lambda) + 1e-12);
    }
    // smooth data: residual of the defining ODE
    auto g = log_bump(grid4k(), 0.2, 5.0);
    auto f = growth_kill_resolvent(law, g.f, lambda);
    double resid = resolvent_residual(R1, law, f, g.f, lambda);
    CHECK(resid <= 1e-3 * l1_pi_norm(law, g.f));
    // norm equality for one-signed data
    CHECK(l1_pi_norm(law, f) ==
          Catch::Approx(l1_pi_norm(law, g.f) / (2.0 + lambda)).epsilon(1e-4));
  }
  // zero data
  std::vector<double> zero(grid4k().size(), 0.0);
  auto fz = growth_kill_resolvent(law, zero, 1.0);
  for (double v : fz) CHECK(v == 0.0);
}

TEST_CASE("weak formulation holds along trajectories", "[evolution]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, grid4k());
  auto tf = log_bump(grid4k(), 0.05, 8.0);
  auto lf = apply_generator(R1, grid4k(), tf);
  double lf_scale = l1_pi_norm(law, lf);

  // stationary start
  auto traj = evolve_rate(R1, gamma_cdf(1.0), 0.5, {});
  double r = weak_form_residual(R1, traj, tf);
  CHECK(r <= 5.0 * traj.dt * lf_scale);

  // transport trajectory
  auto R0 = RateFunction::constant(0.0);
  auto traj0 = evolve_rate(R0, gamma_cdf(2.0), 0.5, {});
  CHECK(weak_form_residual(R0, traj0, tf) < 10.0 * traj0.dt);

  // zero horizon
  auto traj_zero = evolve_rate(R1, gamma_cdf(1.0), 0.0, {});
  CHECK(weak_form_residual(R1, traj_zero, tf) == 0.0);
}

TEST_CASE("mass drift aborts the run with a diagnostic", "[evolution]") {
  // an aggressive synthetic rate dumps mass below the grid; the run must
  // stop once the top value drifts
  auto g = log_grid(1e-4, 50.0, 512);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    f[i] = 1.0 - (1.0 + g[i]) * std::exp(-g[i]);
  GridCDF F0(g, f);
  // a vanishing rate leaves pure growth: mass transports past the grid top
  auto Rsmall = RateFunction::constant(0.05);
  EvolveOptions opt;
  opt.dt = 0.01;  // the 512-point grid cell is wider than the dt cap
  opt.mass_drift_abort = 0.02;
  CHECK_THROWS_AS(evolve_rate(Rsmall, F0, 10.0, opt), numerical_error);
}
