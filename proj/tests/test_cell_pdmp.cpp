#include <catch2/catch_amalgamated.hpp>

#include "fragchoice/cell_pdmp.hpp"
#include "fragchoice/fixed_point.hpp"

using namespace fragchoice;

namespace {
double gamma21(double x) { return 1.0 - (1.0 + x) * std::exp(-x); }
}

TEST_CASE("survivor function", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  CHECK(survivor(R1, 1.0, std::log(2.0)) == Catch::Approx(std::exp(-1.0)));
  CHECK(survivor(R1, 3.7, 0.0) == Catch::Approx(1.0));
  auto R0 = RateFunction::constant(0.0);
  for (double t : {0.1, 1.0, 25.0}) CHECK(survivor(R0, 0.5, t) == Catch::Approx(1.0));

  // nonincreasing in t, from 1
  auto g = log_grid(1e-3, 1e3, 512);
  std::vector<double> rv(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rv[i] = 0.3 + 0.2 * std::sin(std::log(g[i]));
  auto Rt = RateFunction::from_table(g, rv, true);
  for (double z : {0.01, 1.0, 40.0}) {
    double prev = 1.0 + 1e-15;
    for (double t = 0.0; t <= 3.0; t += 0.1) {
      double s = survivor(Rt, z, t);
      CHECK(s <= prev + 1e-12);
      prev = s;
    }
    CHECK(survivor(Rt, z, 0.0) == Catch::Approx(1.0));
  }
}

TEST_CASE("jump times invert the survivor function", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  CHECK(jump_time_from_exp(R1, 1.0, 1.0) == Catch::Approx(std::log(2.0)));
  auto R0 = RateFunction::constant(0.0);
  CHECK(jump_time_from_exp(R0, 1.0, 0.5) ==
        std::numeric_limits<double>::infinity());

  // closed form tau = log(1 + E/(c z)) against the table route
  double c = 2.5;
  auto Rc = RateFunction::constant(c);
  auto g = log_grid(1e-3, 1e4, 4096);
  auto Rtab = RateFunction::from_table(g, std::vector<double>(g.size(), c), true);
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    double z = std::exp(rng.uniform_open() * 6.0 - 3.0);
    double e = rng.exponential();
    double closed = std::log(1.0 + e / (c * z));
    CHECK(jump_time_from_exp(Rc, z, e) == Catch::Approx(closed).margin(1e-12));
    CHECK(jump_time_from_exp(Rtab, z, e) == Catch::Approx(closed).margin(1e-9));
    // survivor at the sampled time recovers e^{-E}
    CHECK(survivor(Rtab, z, jump_time_from_exp(Rtab, z, e)) ==
          Catch::Approx(std::exp(-e)).margin(1e-9));
  }
}

TEST_CASE("path structure follows flow and multiplicative jumps", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  Rng rng(100);
  auto path = simulate_path(R1, 1.0, 6.0, rng);
  CHECK_FALSE(path.absorbed);
  double prev_tau = 0.0, prev_y = path.x0;
  for (const auto& ev : path.events) {
    CHECK(ev.tau > prev_tau);
    CHECK(ev.J > 0.0);
    CHECK(ev.J < 1.0);
    // Y_k = Y_{k-1} e^{dt} J_k to relative 1e-12
    double expect = prev_y * std::exp(ev.tau - prev_tau) * ev.J;
    CHECK(ev.Y == Catch::Approx(expect).epsilon(1e-12));
    prev_tau = ev.tau;
    prev_y = ev.Y;
  }
  // flow before the first jump
  double t_half = path.events.empty() ? 3.0 : path.events.front().tau / 2;
  CHECK(path.value_at(t_half) == Catch::Approx(path.x0 * std::exp(t_half)));
  CHECK(path.value_at(6.0) == Catch::Approx(path.final_value));
}

TEST_CASE("jump factor moments", "[cell_pdmp]") {
  Rng rng(321);
  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double j = std::sqrt(rng.uniform_open());
    s1 += j;
    s2 += j * j;
  }
  double m1 = s1 / n, m2 = s2 / n;
  CHECK(std::abs(m1 - 2.0 / 3.0) < 3.0 * std::sqrt(1.0 / 18.0 / n));
  CHECK(std::abs(m2 - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("ensembles at time zero return the start", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  std::vector<double> horizons{0.0};
  auto res = marginal_ensemble(R1, point_init(2.5), horizons, 500, 99);
  for (double v : res.values[0]) CHECK(v == Catch::Approx(2.5));
  CHECK(res.absorbed == 0);
}

TEST_CASE("stationary initialization stays stationary", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, log_grid(1e-4, 50.0, 4096));
  const std::int64_t M = 20000;
  for (double T : {0.5, 1.0}) {
    std::vector<double> horizons{T};
    auto res = marginal_ensemble(R1, cdf_init(law.cdf), horizons, M, 7777);
    double ks = ks_distance(res.values[0], gamma21);
    INFO("T=" << T << " ks=" << ks);
    CHECK(ks < 0.015);  // 99% band is 1.63/sqrt(M) ~ 0.0115
    CHECK(res.absorbed == 0);
    CHECK(res.exploded == 0);
  }
}

TEST_CASE("marginals forget a point start", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  auto law = stationary_law(R1, log_grid(1e-4, 50.0, 4096));
  const std::int64_t M = 50000;
  std::vector<double> horizons{1.0, 2.0, 5.0, 10.0};
  auto res = marginal_ensemble(R1, point_init(3.0), horizons, M, 2025);
  std::vector<double> tv;
  for (std::size_t h = 0; h < horizons.size(); ++h)
    tv.push_back(dist_tv(res.values[h], law.cdf));
  INFO("tv trace " << tv[0] << " " << tv[1] << " " << tv[2] << " " << tv[3]);
  CHECK(tv[3] < 0.05);
  for (std::size_t h = 1; h < tv.size(); ++h) CHECK(tv[h] <= tv[h - 1] + 0.008);
}

TEST_CASE("ensembles are reproducible from the master seed", "[cell_pdmp]") {
  auto R1 = RateFunction::constant(1.0);
  std::vector<double> horizons{1.5};
  auto a = marginal_ensemble(R1, point_init(1.0), horizons, 200, 4242);
  auto b = marginal_ensemble(R1, point_init(1.0), horizons, 200, 4242);
  CHECK(a.values[0] == b.values[0]);
  CHECK(a.jump_counts == b.jump_counts);
}

TEST_CASE("hitting times along the upward flow", "[cell_pdmp]") {
  auto R0 = RateFunction::constant(0.0);
  Rng rng(5);
  // monotone flow never returns to the start
  CHECK_FALSE(hitting_time(R0, 1.0, 1.0, rng, 50.0).has_value());
  // deterministic first passage from below
  auto h = hitting_time(R0, 0.25, 1.0, rng, 50.0);
  REQUIRE(h.has_value());
  CHECK(*h == Catch::Approx(std::log(4.0)));

  // P(hit exactly at log 2) >= survivor bound e^{-1/2}
  auto R1 = RateFunction::constant(1.0);
  const int trials = 20000;
  int direct = 0, timeouts = 0;
  double t_direct = std::log(2.0);
  for (int i = 0; i < trials; ++i) {
    Rng r = Rng::substream(31337, static_cast<std::uint64_t>(i));
    auto hit = hitting_time(R1, 0.5, 1.0, r, 200.0);
    if (!hit.has_value()) {
      ++timeouts;
      continue;
    }
    if (std::abs(*hit - t_direct) < 1e-12) ++direct;
  }
  double bound = std::exp(-0.5);
  double frac = static_cast<double>(direct) / trials;
  CHECK(frac >= bound - 3.0 * std::sqrt(bound * (1.0 - bound) / trials));
  // timeouts are surfaced, not dropped; with T_max = 200 there are none here
  CHECK(timeouts == 0);
}

TEST_CASE("occupation fractions on flow segments", "[cell_pdmp]") {
  auto R0 = RateFunction::constant(0.0);
  Rng rng(6);
  auto path = simulate_path(R0, 1.0, 1.0, rng);
  CHECK(path.events.empty());
  // whole range covered
  CHECK(occupation_average(path, 0.5, 10.0) == Catch::Approx(1.0));
  // log overlap of [1, e^{1/2}] over one unit of time
  CHECK(occupation_average(path, 1.0, std::exp(0.5)) == Catch::Approx(0.5));

  // single-path Birkhoff average against the stationary quadrature value
  auto R1 = RateFunction::constant(1.0);
  Rng rng2(2718281);
  auto long_path = simulate_path(R1, 1.0, 2000.0, rng2);
  double pi_half_one = (1.5) * std::exp(-0.5) - 2.0 * std::exp(-1.0);
  CHECK(occupation_average(long_path, 0.5, 1.0) ==
        Catch::Approx(pi_half_one).margin(0.02));
}

TEST_CASE("paths under a solved fragmentation rate", "[cell_pdmp]") {
  auto grid = log_grid(1e-4, 50.0, 4096);
  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), grid);
  auto R2 = rate_from_solution(ChoiceRule::max_k(2), F2);
  auto law = stationary_law(R2, grid);
  const std::int64_t M = 20000;
  std::vector<double> horizons{1.0};
  auto res = marginal_ensemble(R2, cdf_init(law.cdf), horizons, M, 888);
  double ks = ks_distance(res.values[0],
                          [&](double x) { return law.cdf.value(x); });
  INFO("ks=" << ks);
  CHECK(ks < 0.015);
}
