#include <catch2/catch_amalgamated.hpp>

#include "fragchoice/fixed_point.hpp"

using namespace fragchoice;

namespace {

const std::vector<double>& narrow_grid() {
  static auto g = log_grid(1e-4, 50.0, 4096);
  return g;
}

const std::vector<double>& wide_grid() {
  static auto g = log_grid(1e-4, 1e6, 4096);
  return g;
}

double gamma21(double x) { return 1.0 - (1.0 + x) * std::exp(-x); }

// Simpson in log-x of f(x) against the stationary density.
template <class Fn>
double simpson_pi(const StationaryLaw& pi, Fn&& f) {
  const auto& x = pi.cdf.grid();
  auto q = [&](std::size_t j) { return x[j] * f(x[j]) * pi.density[j]; };
  double h = std::log(x[1] / x[0]);
  double s = 0.0;
  std::size_t j = 0;
  for (; j + 2 < x.size(); j += 2) s += h / 3.0 * (q(j) + 4.0 * q(j + 1) + q(j + 2));
  for (; j + 1 < x.size(); ++j) s += 0.5 * h * (q(j) + q(j + 1));
  return s;
}

}  // namespace

TEST_CASE("uniform rule solves to its closed form", "[fixed_point]") {
  SolveReport rep;
  auto F = solve_psi_fixed_point(ChoiceRule::uniform(), narrow_grid(), 1e-10, 500, &rep);
  double worst = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i)
    worst = std::max(worst, std::abs(F.values()[i] - gamma21(F.grid()[i])));
  CHECK(worst < 1e-8);  // cellwise-exponential quadrature is exact here
  CHECK(F.value(1.0) == Catch::Approx(1.0 - 2.0 * std::exp(-1.0)).margin(1e-7));
  CHECK(rep.Z == Catch::Approx(std::exp(1.0)).margin(1e-9));
}

TEST_CASE("solved laws have unit candy norm and unit mass", "[fixed_point]") {
  struct Case {
    ChoiceRule rule;
    const std::vector<double>& grid;
  };
  std::vector<Case> cases{{ChoiceRule::uniform(), narrow_grid()},
                          {ChoiceRule::max_k(2), narrow_grid()},
                          {ChoiceRule::max_k(3), narrow_grid()},
                          {ChoiceRule::min_k(2), wide_grid()}};
  for (auto& c : cases) {
    auto F = solve_psi_fixed_point(c.rule, c.grid);
    CHECK(candy_norm(F) == Catch::Approx(1.0).margin(1e-4));
    CHECK(F.values().back() + F.tail_mass() == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("fixed point agrees with the shooting route", "[fixed_point]") {
  for (auto* rule_grid : {"uniform", "max2", "min2"}) {
    std::string name = rule_grid;
    ChoiceRule rule = name == "uniform" ? ChoiceRule::uniform()
                      : name == "max2"  ? ChoiceRule::max_k(2)
                                        : ChoiceRule::min_k(2);
    const auto& grid = name == "min2" ? wide_grid() : narrow_grid();
    auto Ffp = solve_psi_fixed_point(rule, grid);
    auto Fsh = solve_psi_shooting(rule, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(Ffp.values()[i] - Fsh.values()[i]));
    INFO(name << " sup diff " << worst);
    // agreement at the discretization scale (quadrature schemes differ)
    CHECK(worst < (name == "min2" ? 1e-4 : 5e-6));
  }
}

TEST_CASE("rate from solution", "[fixed_point]") {
  auto Fu = solve_psi_fixed_point(ChoiceRule::uniform(), narrow_grid());
  auto Ru = rate_from_solution(ChoiceRule::uniform(), Fu);
  for (double x : {0.01, 0.5, 1.0, 7.0, 40.0}) {
    CHECK(Ru.rate(x) == Catch::Approx(1.0));
    CHECK(Ru.rho(x) == Catch::Approx(x - 1.0).margin(1e-8));
  }
  CHECK(Ru.rho(1.0) == Catch::Approx(0.0).margin(1e-12));

  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), narrow_grid());
  auto R2 = rate_from_solution(ChoiceRule::max_k(2), F2);
  CHECK(R2.rho(1.0) == Catch::Approx(0.0).margin(1e-12));
  // R = 2F: increasing toward 2
  CHECK(R2.rate(0.01) < 0.1);
  CHECK(R2.rate(40.0) == Catch::Approx(2.0).margin(1e-6));
  for (double x : {0.3, 1.0, 4.0})
    CHECK(R2.rate(x) == Catch::Approx(2.0 * F2.value(x)).margin(1e-12));
}

TEST_CASE("stationary law for builtin rates", "[fixed_point]") {
  auto law = stationary_law(RateFunction::constant(1.0), narrow_grid());
  CHECK(law.Z == Catch::Approx(std::exp(1.0)).margin(1e-10));
  CHECK(law.cdf.value(1.0) == Catch::Approx(1.0 - 2.0 * std::exp(-1.0)).margin(1e-9));
  // density x e^{-x}
  CHECK(law.pdf(2.0) == Catch::Approx(2.0 * std::exp(-2.0)).margin(1e-9));
  // second-moment identity: int x R dpi = 2
  auto R = RateFunction::constant(1.0);
  double m = simpson_pi(law, [&](double x) { return x * R.rate(x); });
  CHECK(m == Catch::Approx(2.0).margin(1e-6));

  CHECK_THROWS_AS(stationary_law(RateFunction::constant(0.0), narrow_grid()),
                  numerical_error);
}

TEST_CASE("stationary identity for a solved rate", "[fixed_point]") {
  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), narrow_grid());
  auto R2 = rate_from_solution(ChoiceRule::max_k(2), F2);
  auto law = stationary_law(R2, narrow_grid());
  double m = simpson_pi(law, [&](double x) { return x * R2.rate(x); });
  CHECK(m == Catch::Approx(2.0).margin(1e-4));
  // the stationary law of psi(F) reproduces F itself
  double worst = 0.0;
  for (std::size_t i = 0; i < F2.size(); ++i)
    worst = std::max(worst, std::abs(law.cdf.values()[i] - F2.values()[i]));
  CHECK(worst < 1e-9);
  // positive density on the whole grid
  for (double d : law.density) CHECK(d > 0.0);
}

TEST_CASE("rate function tables and inverses", "[fixed_point]") {
  auto Rc = RateFunction::constant(2.5);
  CHECK(Rc.rho(3.0) == Catch::Approx(2.5 * 2.0));
  CHECK(Rc.rho_inverse(5.0) == Catch::Approx(3.0));
  CHECK(Rc.rho_sup() == std::numeric_limits<double>::infinity());

  // table matching a constant rate: closed form vs tabulated inverse to 1e-9
  auto g = log_grid(1e-3, 100.0, 2048);
  std::vector<double> rv(g.size(), 2.5);
  auto Rt = RateFunction::from_table(g, rv, true);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    double y = rng.uniform_open() * 200.0 - 2.0;
    CHECK(Rt.rho_inverse(y) == Catch::Approx(Rc.rho_inverse(y)).margin(1e-9));
  }
  CHECK(Rt.rho(1.0) == Catch::Approx(0.0).margin(1e-12));

  // generalized inverse resolves flat stretches to the left edge
  std::vector<double> xs{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> rs{1.0, 1.0, 0.0, 0.0, 1.0};
  auto Rf = RateFunction::from_table(xs, rs, true);
  double plateau = Rf.rho(2.0);
  CHECK(Rf.rho(4.0) == Catch::Approx(plateau));  // R = 0 on [2,4]
  CHECK(Rf.rho_inverse(plateau) <= 2.0 + 1e-9);

  // extrapolation must be explicitly enabled
  auto Rne = RateFunction::from_table(xs, rs, false);
  CHECK_THROWS_AS(Rne.rate(100.0), numerical_error);
  CHECK_THROWS_AS(Rne.rho(0.1), numerical_error);

  CHECK_THROWS_AS(RateFunction::from_table({1.0, 2.0}, {-0.5, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("stationarity residual detects the solution quality", "[fixed_point]") {
  // exact closed form on the grid
  std::vector<double> f(narrow_grid().size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = gamma21(narrow_grid()[i]);
  GridCDF exact(narrow_grid(), f);
  double r_exact = fixed_point_residual(exact, ChoiceRule::uniform());
  CHECK(r_exact < 1e-3);

  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), narrow_grid());
  CHECK(fixed_point_residual(F2, ChoiceRule::max_k(2)) < 5e-3);

  // halving the spacing at least halves the residual
  auto g2 = log_grid(1e-4, 50.0, 8192);
  std::vector<double> f2(g2.size());
  for (std::size_t i = 0; i < f2.size(); ++i) f2[i] = gamma21(g2[i]);
  GridCDF exact2(g2, f2);
  CHECK(fixed_point_residual(exact2, ChoiceRule::uniform()) < 0.5 * r_exact);

  // a deliberately skewed CDF is flagged
  std::vector<double> bad = f;
  for (std::size_t i = f.size() / 2; i < f.size(); ++i) {
    double prev = bad[i - 1];
    bad[i] = std::min(1.0, prev + 1.1 * (f[i] - f[i - 1]));
  }
  GridCDF skewed(narrow_grid(), bad);
  CHECK(fixed_point_residual(skewed, ChoiceRule::uniform()) > 0.05);
}

TEST_CASE("tail fits recover decay laws", "[fixed_point]") {
  // synthetic 1-F = x e^{-4x} on the branch where it is a valid survival
  auto g = log_grid(0.5, 20.0, 2048);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    f[i] = std::clamp(1.0 - g[i] * std::exp(-4.0 * g[i]), 0.0, 1.0);
  auto fit = tail_fit(GridCDF(g, f), TailForm::exp_linear);
  CHECK(fit.decay == Catch::Approx(4.0).margin(0.01));

  auto F2 = solve_psi_fixed_point(ChoiceRule::max_k(2), narrow_grid());
  auto fit2 = tail_fit(F2, TailForm::exp_linear);
  CHECK(fit2.decay > 1.9);
  CHECK(fit2.decay < 2.1);

  auto F3 = solve_psi_fixed_point(ChoiceRule::min_k(3), wide_grid());
  auto fit3 = tail_fit(F3, TailForm::power);
  CHECK(fit3.decay > 0.45);
  CHECK(fit3.decay < 0.55);

  // window outside the grid range
  auto gs = log_grid(0.5, 2.0, 64);
  std::vector<double> fs(gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) fs[i] = 0.3 * (gs[i] - 0.5) / 1.5;
  CHECK_THROWS_AS(tail_fit(GridCDF(gs, fs), TailForm::power), numerical_error);
}
