#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "levelforge/green_solver.hpp"

using namespace lf;
using Catch::Approx;

namespace {

// Kelvin image-charge closed form for the unit ball, pole at the centre.
double ball_green_exact(double r, double R = 1.0) {
  return (1.0 / (4 * kPi)) * (1.0 / r - 1.0 / R);
}

SolveOptions ball_options() {
  SolveOptions opt;
  opt.density = 500.0 / (4 * kPi);
  opt.fit_tol = 1e-5;
  return opt;
}

}  // namespace

TEST_CASE("unit ball matches the image-charge formula to 1e-6") {
  auto dom = make_ball_domain(1.0);
  auto m = solve_green(dom, KernelSpec{3, 0.0}, Vec3{0, 0, 0}, ball_options());
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    Vec3 x = rng.unit3() * 0.5;
    REQUIRE(std::abs(m.value(x) - ball_green_exact(0.5)) < 1e-6);
  }
  REQUIRE(m.fit.residual_holdout < 1e-5);
}

TEST_CASE("held-out boundary residual is the defining constraint") {
  auto dom = make_ball_domain(1.0);
  MfsSystem sys(dom, KernelSpec{3, 0.0}, ball_options());
  auto m = solve_green(sys, Vec3{0.2, -0.1, 0.3}, 5e-5);
  for (std::size_t i = 0; i < sys.holdout_points().size(); i += 7)
    REQUIRE(std::abs(m.value(sys.holdout_points()[i].point)) < 5e-5);
}

TEST_CASE("green symmetry between interior pole pairs") {
  auto dom = make_ball_domain(1.0);
  SolveOptions opt = ball_options();
  opt.density = 1000.0 / (4 * kPi);
  MfsSystem sys(dom, KernelSpec{3, 0.0}, opt);
  Vec3 x{0.4, 0.1, -0.2}, y{-0.3, 0.2, 0.35};
  auto gx = solve_green(sys, x, 5e-5);
  auto gy = solve_green(sys, y, 5e-5);
  REQUIRE(std::abs(gx.value(y) - gy.value(x)) < 5e-5);
}

TEST_CASE("minimum principle: positivity at interior probes") {
  auto dom = make_ball_domain(1.0);
  auto m = solve_green(dom, KernelSpec{3, 0.8}, Vec3{0.1, 0, 0}, ball_options());
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Vec3 x = rng.unit3() * (0.97 * rng.uniform());
    if ((x - m.pole).norm() < 0.05) continue;
    REQUIRE(m.value(x) > 0);
  }
}

TEST_CASE("free-space domination") {
  auto dom = make_ball_domain(1.0);
  KernelSpec spec{3, 0.0};
  auto m = solve_green(dom, spec, Vec3{0.15, 0.1, 0}, ball_options());
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Vec3 x = rng.unit3() * (0.95 * rng.uniform());
    if ((x - m.pole).norm() < 0.05) continue;
    REQUIRE(m.value(x) <= free_green<3>(spec, x, m.pole) * (1 + 1e-3));
  }
}

TEST_CASE("monotone exhaustion: longer truncation increases G pointwise") {
  KernelSpec spec{3, 0.0};
  SolveOptions opt;
  opt.density = 16;
  opt.fit_tol = 5e-4;
  auto short_dom = make_straight_cylinder(1.0, 6.0, false);
  auto long_dom = make_straight_cylinder(1.0, 9.0, false);
  auto gs = solve_green(short_dom, spec, Vec3{0, 0, 0}, opt);
  auto gl = solve_green(long_dom, spec, Vec3{0, 0, 0}, opt);
  for (double t : {0.5, 1.5, 2.5, 3.5}) {
    Vec3 x{0.2, 0.1, t};
    REQUIRE(gs.value(x) <= gl.value(x) + 2e-4);
  }
}

TEST_CASE("cylinder decay slope matches the spectral prediction") {
  auto dom = make_straight_cylinder(1.0, 10.0, false);
  for (double k : {0.0, 1.0}) {
    KernelSpec spec{3, k};
    SolveOptions opt;
    opt.density = 20;
    opt.fit_tol = 5e-4;
    opt.charge_offset = 0.7;
    MfsSystem sys(dom, spec, opt);
    auto m = solve_green(sys, Vec3{0, 0, 0}, opt.fit_tol);
    auto bound = domain_spectral_bound(dom, 28, k);
    double expect = k == 0 ? std::sqrt(5.783185962946785) : std::sqrt(6.783185962946785);
    REQUIRE(bound.decay_rate == Approx(expect).epsilon(0.005));
    auto rep = verify_decay(m, dom, bound, 28, 1e-5);
    REQUIRE(rep.pass);
    REQUIRE(rep.axis[0].slope == Approx(-expect).epsilon(0.05));
    // derivative decay at the same rate, within the 0.9 safety factor
    REQUIRE(rep.axis[0].slope_grad <= -0.9 * bound.decay_rate);
    REQUIRE(rep.axis[0].slope_hess <= -0.9 * bound.decay_rate);
  }
}

TEST_CASE("pole placement is validated") {
  auto dom = make_ball_domain(1.0);
  MfsSystem sys(dom, KernelSpec{3, 0.0}, ball_options());
  REQUIRE_THROWS_AS(solve_green(sys, Vec3{2, 0, 0}, 1e-5), SolverError);
  REQUIRE_THROWS_AS(solve_green(sys, Vec3{0.999, 0, 0}, 1e-5), SolverError);
}

TEST_CASE("unattainable residual target reports the achieved value") {
  auto dom = make_ball_domain(1.0);
  SolveOptions opt;
  opt.density = 4.0;  // deliberately coarse
  opt.fit_tol = 1e-12;
  bool threw = false;
  try {
    solve_green(dom, KernelSpec{3, 0.0}, Vec3{0, 0, 0}, opt);
  } catch (const SolverError& e) {
    threw = true;
    REQUIRE(e.achieved > 1e-12);
  }
  REQUIRE(threw);
}

TEST_CASE("cap green on the unit disk matches the log closed form") {
  CapProfile disk;
  disk.radius = 1.0;
  auto m = solve_cap_green(disk, 0.0, Vec2{0, 0}, 1e-8);
  for (double r : {0.3, 0.5, 0.7}) {
    double exact = std::log(1.0 / r) / (2 * kPi);
    REQUIRE(m.value(Vec2{r, 0}) == Approx(exact).margin(1e-7));
    REQUIRE(m.value(Vec2{0, -r}) == Approx(exact).margin(1e-7));
  }
  // Hopf gradient at the rim: |grad| = 1/(2 pi r) for the disk
  Vec2 rim{0.98, 0};
  REQUIRE(m.gradient(rim).norm() == Approx(1.0 / (2 * kPi * 0.98)).epsilon(1e-3));
}

TEST_CASE("cap green rejects exterior poles") {
  CapProfile disk;
  disk.radius = 1.0;
  REQUIRE_THROWS_AS(solve_cap_green(disk, 0.0, Vec2{1.5, 0}, 1e-8), SolverError);
}
