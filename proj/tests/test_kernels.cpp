#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "levelforge/field.hpp"
#include "levelforge/kernels.hpp"

using namespace lf;
using Catch::Approx;

namespace {

// Oracle: outward flux of -grad G through the sphere of radius r, by
// product quadrature (Gauss-Legendre in cos(theta) x midpoint in phi).
// For a fundamental solution this tends to 1 as r -> 0.
double flux_through_sphere(const KernelSpec& spec, double r) {
  // 24-point Gauss-Legendre nodes on [-1,1] via Newton on Legendre P_24.
  const int n = 24, m = 48;
  std::vector<double> xg(n), wg(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 60; ++it) {
      double p0 = 1, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1, p1 = x;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1);
    xg[i] = x;
    wg[i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  Vec3 y{0, 0, 0};
  double flux = 0;
  for (int i = 0; i < n; ++i) {
    double ct = xg[i], st = std::sqrt(1 - ct * ct);
    for (int k = 0; k < m; ++k) {
      double phi = 2 * kPi * (k + 0.5) / m;
      Vec3 u{st * std::cos(phi), st * std::sin(phi), ct};
      Vec3 x = u * r;
      double dGdr = free_green_grad<3>(spec, x, y).dot(u);
      flux += wg[i] * (2 * kPi / m) * (-dGdr) * r * r;
    }
  }
  return flux;
}

// Oracle: radial ODE residual w'' + (2/r) w' - k^2 w at radius r by central
// differences on the kernel itself.
double radial_ode_residual(const KernelSpec& spec, double r, double h) {
  auto w = [&](double rr) {
    return free_green<3>(spec, Vec3{rr, 0, 0}, Vec3{0, 0, 0});
  };
  double d1 = (w(r + h) - w(r - h)) / (2 * h);
  double d2 = (w(r + h) - 2 * w(r) + w(r - h)) / (h * h);
  return d2 + 2.0 / r * d1 - spec.yukawa_k * spec.yukawa_k * w(r);
}

}  // namespace

TEST_CASE("laplace kernel in 3d matches 1/(4 pi r)") {
  KernelSpec spec{3, 0.0};
  Vec3 y{0.2, -0.1, 0.4};
  Vec3 x1 = y + Vec3{1, 0, 0};
  REQUIRE(free_green<3>(spec, x1, y) == Approx(1.0 / (4 * kPi)).epsilon(1e-13));
  Vec3 x2 = y + Vec3{0, 2, 0};
  REQUIRE(free_green<3>(spec, x2, y) / free_green<3>(spec, x1, y) ==
          Approx(0.5).epsilon(1e-13));
}

TEST_CASE("yukawa kernel in 3d: ODE + unit flux oracle freezes e^{-kr}/(4 pi r)") {
  KernelSpec spec{3, 1.0};
  // The oracle first: the kernel satisfies the radial ODE away from the pole
  // and carries unit flux through small spheres.
  REQUIRE(std::abs(radial_ode_residual(spec, 0.8, 1e-4)) < 1e-6);
  REQUIRE(flux_through_sphere(spec, 1e-3) == Approx(1.0).margin(3e-5));
  REQUIRE(flux_through_sphere(spec, 1.0) == Approx(std::exp(-1.0) * 2).margin(1e-10));
  // Frozen closed form at r=1.
  double expect = std::exp(-1.0) / (4 * kPi);  // ~0.0292764
  REQUIRE(free_green<3>(spec, Vec3{1, 0, 0}, Vec3{0, 0, 0}) ==
          Approx(expect).epsilon(1e-13));
}

TEST_CASE("gradient matches finite differences") {
  for (double k : {0.0, 1.0, 2.5}) {
    for (int dim : {2, 3}) {
      KernelSpec spec{dim, k};
      if (dim == 3) {
        Vec3 x{0.3, -0.7, 0.5}, y{-0.2, 0.1, -0.3};
        Vec3 g = free_green_grad<3>(spec, x, y);
        double h = 1e-5;
        for (int i = 0; i < 3; ++i) {
          Vec3 e;
          e[i] = h;
          double fd = (free_green<3>(spec, x + e, y) - free_green<3>(spec, x - e, y)) / (2 * h);
          REQUIRE(std::abs(fd - g[i]) / std::max(1e-12, std::abs(g[i])) < 1e-6);
        }
      } else {
        Vec2 x{0.9, -0.4}, y{-0.1, 0.2};
        Vec2 g = free_green_grad<2>(spec, x, y);
        double h = 1e-5;
        for (int i = 0; i < 2; ++i) {
          Vec2 e;
          e[i] = h;
          double fd = (free_green<2>(spec, x + e, y) - free_green<2>(spec, x - e, y)) / (2 * h);
          REQUIRE(std::abs(fd - g[i]) / std::max(1e-12, std::abs(g[i])) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("hessian trace reproduces the PDE off the pole") {
  Vec3 x{0.6, 0.2, -0.4}, y{-0.3, 0.5, 0.1};
  KernelSpec lap{3, 0.0};
  REQUIRE(std::abs(free_green_hess<3>(lap, x, y).trace()) < 1e-12);
  KernelSpec yuk{3, 1.0};
  double tr = free_green_hess<3>(yuk, x, y).trace();
  REQUIRE(tr == Approx(free_green<3>(yuk, x, y)).epsilon(1e-11));
  KernelSpec yuk2{2, 1.5};
  Vec2 x2{0.4, 0.7}, y2{-0.2, 0.1};
  REQUIRE(free_green_hess<2>(yuk2, x2, y2).trace() ==
          Approx(1.5 * 1.5 * free_green<2>(yuk2, x2, y2)).epsilon(1e-10));
}

TEST_CASE("hessian is symmetric and matches FD of the gradient") {
  KernelSpec spec{3, 0.7};
  Vec3 x{0.5, -0.2, 0.8}, y{0, 0, 0};
  Mat<3> H = free_green_hess<3>(spec, x, y);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) REQUIRE(H(i, j) == Approx(H(j, i)).margin(1e-15));
  double h = 1e-5;
  for (int j = 0; j < 3; ++j) {
    Vec3 e;
    e[j] = h;
    Vec3 fd = (free_green_grad<3>(spec, x + e, y) - free_green_grad<3>(spec, x - e, y)) / (2 * h);
    for (int i = 0; i < 3; ++i) REQUIRE(H(i, j) == Approx(fd[i]).margin(1e-6 * H.frobenius()));
  }
}

TEST_CASE("kernel is symmetric in its arguments") {
  Rng rng(17);
  for (double k : {0.0, 1.3}) {
    KernelSpec spec{3, k};
    for (int t = 0; t < 50; ++t) {
      Vec3 x = rng.in_box(Box3::cube(2.0)), y = rng.in_box(Box3::cube(2.0));
      if ((x - y).norm() < 1e-3) continue;
      REQUIRE(free_green<3>(spec, x, y) == Approx(free_green<3>(spec, y, x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("finite-difference PDE residual converges at order >= 1.9") {
  for (double k : {0.0, 1.0}) {
    KernelSpec spec{3, k};
    ChargeEnsemble<3> ens;
    ens.add(Vec3{0, 0, 0}, 1.0);
    PotentialField<3> f(spec, ens);
    Vec3 probe{0.35, 0.21, 0.4};  // distance ~0.58 from the pole
    double h1 = 0.02, h2 = 0.01;
    double r1 = std::abs(fd_pde_residual<3>(f, spec, probe, h1));
    double r2 = std::abs(fd_pde_residual<3>(f, spec, probe, h2));
    double order = std::log2(r1 / r2);
    REQUIRE(order >= 1.9);
  }
  // 5-point stencil in dimension 2
  KernelSpec spec2{2, 1.0};
  ChargeEnsemble<2> ens2;
  ens2.add(Vec2{0, 0}, 1.0);
  PotentialField<2> f2(spec2, ens2);
  Vec2 probe2{0.4, 0.3};
  double r1 = std::abs(fd_pde_residual<2>(f2, spec2, probe2, 0.02));
  double r2 = std::abs(fd_pde_residual<2>(f2, spec2, probe2, 0.01));
  REQUIRE(std::log2(r1 / r2) >= 1.9);
}

TEST_CASE("yukawa decay: log G + (n-2) log r is affine with slope -k") {
  KernelSpec spec{3, 1.7};
  // least-squares line through (r, log G + log r)
  int n = 40;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double r = 1.0 + 4.0 * i / (n - 1);
    double v = std::log(free_green<3>(spec, Vec3{r, 0, 0}, Vec3{0, 0, 0})) + std::log(r);
    sx += r;
    sy += v;
    sxx += r * r;
    sxy += r * v;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(slope == Approx(-1.7).epsilon(0.01));
}

TEST_CASE("dimension 2 kernels") {
  KernelSpec lap{2, 0.0};
  REQUIRE(free_green<2>(lap, Vec2{1, 0}, Vec2{0, 0}) == Approx(0.0).margin(1e-15));
  REQUIRE(free_green<2>(lap, Vec2{0.5, 0}, Vec2{0, 0}) ==
          Approx(std::log(2.0) / (2 * kPi)).epsilon(1e-13));
  KernelSpec yuk{2, 2.0};
  // reference K0(1) = 0.42102443824070834
  REQUIRE(free_green<2>(yuk, Vec2{0.5, 0}, Vec2{0, 0}) ==
          Approx(0.42102443824070834 / (2 * kPi)).epsilon(1e-12));
  // positivity for k > 0
  REQUIRE(free_green<2>(yuk, Vec2{3, 0}, Vec2{0, 0}) > 0);
}

TEST_CASE("coincident points raise a domain error") {
  KernelSpec spec{3, 0.0};
  Vec3 p{0.1, 0.2, 0.3};
  REQUIRE_THROWS_AS(free_green<3>(spec, p, p), std::domain_error);
  REQUIRE_THROWS_AS(free_green_grad<3>(spec, p, p), std::domain_error);
  REQUIRE_THROWS_AS(free_green_hess<3>(spec, p, p), std::domain_error);
}

TEST_CASE("kernel spec validation") {
  KernelSpec bad_dim{4, 0.0};
  REQUIRE_THROWS_AS(bad_dim.validate(), std::invalid_argument);
  KernelSpec bad_k{3, -1.0};
  REQUIRE_THROWS_AS(bad_k.validate(), std::invalid_argument);
  KernelSpec ok{2, 0.0};
  REQUIRE_NOTHROW(ok.validate());
}
