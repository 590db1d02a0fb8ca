#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "fragchoice/rng.hpp"
#include "fragchoice/rules.hpp"

using namespace fragchoice;

namespace {

// 99% Kolmogorov-Smirnov band for n samples.
double ks_band(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double ks_vs_psi(const ChoiceRule& rule, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> us(n);
  for (auto& u : us) u = rule.sample_u(rng);
  std::sort(us.begin(), us.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = rule.Psi(us[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

}  // namespace

TEST_CASE("builtin rules evaluate their closed forms", "[rules]") {
  auto max2 = ChoiceRule::max_k(2);
  auto min2 = ChoiceRule::min_k(2);
  auto uni = ChoiceRule::uniform();
  CHECK(max2.Psi(0.5) == Catch::Approx(0.25));
  CHECK(min2.Psi(0.5) == Catch::Approx(0.75));
  for (double u : {0.0, 0.3, 1.0}) CHECK(uni.Psi(u) == Catch::Approx(u).margin(0));
  CHECK(max2.psi(0.5) == Catch::Approx(1.0));
  CHECK(min2.psi(0.5) == Catch::Approx(1.0));

  // exact inverse samplers
  CHECK(max2.inverse(0.81) == Catch::Approx(0.9));
  CHECK(min2.inverse(0.75) == Catch::Approx(0.5));
  CHECK(uni.inverse(0.42) == Catch::Approx(0.42));
}

TEST_CASE("constructor preconditions", "[rules]") {
  CHECK_THROWS_AS(ChoiceRule::max_k(0.5), std::invalid_argument);
  CHECK_THROWS_AS(ChoiceRule::min_k(0.99), std::invalid_argument);
  CHECK_THROWS_AS(
      ChoiceRule::mixture({0.5, 0.6}, {ChoiceRule::uniform(), ChoiceRule::uniform()}),
      std::invalid_argument);
  // non-monotone table
  CHECK_THROWS_AS(ChoiceRule::table({0.0, 0.5, 1.0}, {0.0, 0.7, 0.6}),
                  std::invalid_argument);
  // bad endpoints
  CHECK_THROWS_AS(ChoiceRule::table({0.0, 1.0}, {0.1, 1.0}), std::invalid_argument);
}

TEST_CASE("assumption check on a grid", "[rules]") {
  auto uni = ChoiceRule::uniform();
  auto rep = uni.check_assumption(1.0, 1.0, 1000);
  CHECK(rep.ok);
  CHECK(rep.worst_ratio == Catch::Approx(1.0));

  auto max2 = ChoiceRule::max_k(2);
  CHECK(max2.check_assumption(1.0, 2.0, 1000).ok);
  // 1-u^2 = (1-u)(1+u) >= 1-u everywhere, so kappa=1 passes as well
  CHECK(max2.check_assumption(1.0, 1.0, 1000).ok);
  // but a constant above 1 fails near u=0
  CHECK_FALSE(max2.check_assumption(1.5, 2.0, 1000).ok);
}

TEST_CASE("mixture is the pointwise convex combination", "[rules]") {
  auto mix = ChoiceRule::mixture({0.3, 0.7},
                                 {ChoiceRule::max_k(2), ChoiceRule::min_k(3)});
  auto max2 = ChoiceRule::max_k(2);
  auto min3 = ChoiceRule::min_k(3);
  for (int i = 0; i <= 100; ++i) {
    double u = i / 100.0;
    CHECK(std::abs(mix.Psi(u) - (0.3 * max2.Psi(u) + 0.7 * min3.Psi(u))) < 1e-12);
  }
  // bisection inverse hits Psi^{-1} on the mixture
  for (double p : {0.1, 0.5, 0.9}) {
    double u = mix.inverse(p);
    CHECK(mix.Psi(u) == Catch::Approx(p).margin(1e-10));
  }
}

TEST_CASE("table rule approximates its source law", "[rules]") {
  std::vector<double> us, ps;
  for (int i = 0; i <= 200; ++i) {
    double u = i / 200.0;
    us.push_back(u);
    ps.push_back(u * u);
  }
  auto tab = ChoiceRule::table(us, ps);
  auto max2 = ChoiceRule::max_k(2);
  for (double u : {0.05, 0.31, 0.5, 0.77, 0.99}) {
    CHECK(tab.Psi(u) == Catch::Approx(max2.Psi(u)).margin(1e-4));
    CHECK(tab.psi(u) == Catch::Approx(max2.psi(u)).margin(1e-2));
    CHECK(tab.inverse(max2.Psi(u)) == Catch::Approx(u).margin(1e-4));
  }
}

TEST_CASE("inverse-transform samples match Psi (KS band)", "[rules]") {
  const std::size_t n = 100000;
  std::vector<ChoiceRule> rules = {
      ChoiceRule::uniform(), ChoiceRule::max_k(2), ChoiceRule::min_k(2),
      ChoiceRule::max_k(3.5),
      ChoiceRule::mixture({0.4, 0.6}, {ChoiceRule::max_k(2), ChoiceRule::min_k(3)})};
  std::uint64_t seed = 2024;
  for (const auto& rule : rules) {
    // KS of Psi(u_i) against uniform(0,1) == KS of u_i against Psi
    CHECK(ks_vs_psi(rule, n, seed++) < ks_band(n));
  }
}

TEST_CASE("descriptor grammar round-trips", "[rules]") {
  CHECK(parse_rule("uniform").kind() == RuleKind::uniform);
  auto m = parse_rule("max:2.5");
  CHECK(m.kind() == RuleKind::max);
  CHECK(m.k() == Catch::Approx(2.5));
  auto mix = parse_rule("mix:0.25*max:2+0.75*min:3");
  CHECK(mix.kind() == RuleKind::mixture);
  CHECK(mix.Psi(0.5) ==
        Catch::Approx(0.25 * 0.25 + 0.75 * (1.0 - 0.125)));

  std::string path = "test_rule_table.csv";
  {
    std::ofstream out(path);
    out << "u,Psi\n";
    for (int i = 0; i <= 10; ++i) out << i / 10.0 << "," << i / 10.0 << "\n";
  }
  auto tab = parse_rule("table:" + path);
  CHECK(tab.Psi(0.37) == Catch::Approx(0.37));
  std::remove(path.c_str());

  CHECK_THROWS_AS(parse_rule("gauss:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rule("max:0.2"), std::invalid_argument);
}
