#include <doctest.h>

#include <cmath>
#include <random>

#include "nes/game.hpp"

using nes::Mat2;
using nes::QuadraticGame;
using nes::Vec2;

namespace {

QuadraticGame<double> benchmark_game() {
  return nes::duopoly_from_market(100.0, 0.2, 30.0, 10.0);
}

}  // namespace

TEST_CASE("market reduction produces the expected payoff coefficients") {
  const auto g = benchmark_game();
  CHECK(g.p1.own_quad == doctest::Approx(-5.0).epsilon(1e-14));
  CHECK(g.p1.other_quad == 0.0);
  CHECK(g.p1.cross == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(g.p1.lin_own == doctest::Approx(125.0).epsilon(1e-14));
  CHECK(g.p1.lin_other == doctest::Approx(-75.0).epsilon(1e-14));
  CHECK(g.p1.offset == doctest::Approx(-1500.0).epsilon(1e-14));
  CHECK(g.p2.own_quad == doctest::Approx(-5.0).epsilon(1e-14));
  CHECK(g.p2.other_quad == 0.0);
  CHECK(g.p2.cross == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(g.p2.lin_own == doctest::Approx(75.0).epsilon(1e-14));
  CHECK(g.p2.lin_other == doctest::Approx(-25.0).epsilon(1e-14));
  CHECK(g.p2.offset == doctest::Approx(-500.0).epsilon(1e-14));
}

TEST_CASE("hessian and offset stack the own-action slopes") {
  const auto g = benchmark_game();
  const Mat2<double> h = nes::hessian(g);
  CHECK(h(0, 0) == doctest::Approx(-5.0).epsilon(1e-14));
  CHECK(h(0, 1) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(h(1, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(h(1, 1) == doctest::Approx(-5.0).epsilon(1e-14));
  const Vec2<double> off = nes::offset_vector(g);
  CHECK(off[0] == doctest::Approx(125.0).epsilon(1e-14));
  CHECK(off[1] == doctest::Approx(75.0).epsilon(1e-14));
}

TEST_CASE("equilibrium of the benchmark duopoly") {
  const auto g = benchmark_game();
  const Vec2<double> star = nes::nash_equilibrium(g);
  CHECK(star[0] == doctest::Approx(130.0 / 3.0).epsilon(1e-12));
  CHECK(star[1] == doctest::Approx(110.0 / 3.0).epsilon(1e-12));
  const Vec2<double> grad = nes::pseudo_gradient(g, star);
  CHECK(std::abs(grad[0]) < 1e-10);
  CHECK(std::abs(grad[1]) < 1e-10);
}

TEST_CASE("payoffs at the equilibrium and at the origin") {
  const auto g = benchmark_game();
  const Vec2<double> star = nes::nash_equilibrium(g);
  CHECK(nes::payoff(g, 0, star) == doctest::Approx(4000.0 / 9.0).epsilon(1e-10));
  CHECK(nes::payoff(g, 1, star) == doctest::Approx(16000.0 / 9.0).epsilon(1e-10));
  const Vec2<double> origin = Vec2<double>::Zero();
  CHECK(nes::payoff(g, 0, origin) == -1500.0);
  CHECK(nes::payoff(g, 1, origin) == -500.0);
}

TEST_CASE("equal margins give the symmetric split point") {
  const auto g = nes::duopoly_from_market(100.0, 0.2, 30.0, 30.0);
  const Vec2<double> star = nes::nash_equilibrium(g);
  CHECK(star[0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(star[1] == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("pseudo-gradient matches a central difference of the payoffs") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> coef(-4.0, 4.0);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  const double step = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    QuadraticGame<double> g;
    g.p1 = {-1.0 - std::abs(coef(rng)), coef(rng), coef(rng),
            coef(rng), coef(rng), coef(rng)};
    g.p2 = {-1.0 - std::abs(coef(rng)), coef(rng), coef(rng),
            coef(rng), coef(rng), coef(rng)};
    const Vec2<double> theta(pos(rng), pos(rng));
    const Vec2<double> grad = nes::pseudo_gradient(g, theta);
    for (int i = 0; i < 2; ++i) {
      Vec2<double> up = theta, dn = theta;
      up[i] += step;
      dn[i] -= step;
      const double fd =
          (nes::payoff(g, i, up) - nes::payoff(g, i, dn)) / (2.0 * step);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("payoff evaluates the declared quadratic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    QuadraticGame<double> g;
    g.p1 = {d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
    g.p2 = {d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
    const Vec2<double> th(d(rng), d(rng));
    const double own = th[1], other = th[0];
    const double expect = g.p2.own_quad / 2 * own * own +
                          g.p2.other_quad / 2 * other * other +
                          g.p2.cross * own * other + g.p2.lin_own * own +
                          g.p2.lin_other * other + g.p2.offset;
    CHECK(nes::payoff(g, 1, th) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("singular interaction structure is rejected") {
  QuadraticGame<double> g;
  g.p1 = {-1.0, 0.0, 2.0, 1.0, 0.0, 0.0};
  g.p2 = {-4.0, 0.0, 2.0, 1.0, 0.0, 0.0};
  CHECK_THROWS_AS(nes::nash_equilibrium(g), nes::SingularHessian);
}

TEST_CASE("validation rejects convex own-payoff curvature") {
  QuadraticGame<double> g;
  g.p1 = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  g.p2 = {-1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(nes::validate(g), nes::InvalidParameters);
  g.p1.own_quad = -1.0;
  CHECK_NOTHROW(nes::validate(g));
}

TEST_CASE("market validation") {
  CHECK_THROWS_AS(nes::duopoly_from_market(100.0, 0.0, 30.0, 10.0),
                  nes::InvalidMarket);
  CHECK_THROWS_AS(nes::duopoly_from_market(100.0, -0.2, 30.0, 10.0),
                  nes::InvalidMarket);
}

TEST_CASE("two-by-two stability test") {
  Mat2<double> m;
  m << -1.0, 0.0, 0.0, -1.0;
  CHECK(nes::hurwitz_check(m));
  m << 1.0, 0.0, 0.0, -1.0;
  CHECK_FALSE(nes::hurwitz_check(m));
  m << 0.0, 1.0, -1.0, 0.0;
  CHECK_FALSE(nes::hurwitz_check(m));
  m << -5.0, 2.5, 2.5, -5.0;
  CHECK(nes::hurwitz_check(m));
}
