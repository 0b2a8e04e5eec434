#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

#include "levelforge/field.hpp"
#include "levelforge/levelset.hpp"

using namespace lf;
using Catch::Approx;

namespace {

AnalyticField<3> sphere_field(Vec3 c = {0, 0, 0}, double R = 1) {
  return AnalyticField<3>(
      [=](const Vec3& x) { return (x - c).norm2() - R * R; },
      [=](const Vec3& x) { return (x - c) * 2.0; },
      [](const Vec3&) {
        Mat<3> h = Mat<3>::identity() * 2.0;
        return h;
      });
}

double torus_implicit(const Vec3& x, double R, double r) {
  double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
  return sqr(rho - R) + x[2] * x[2] - r * r;
}

}  // namespace

TEST_CASE("sphere extracts as one genus-0 component") {
  auto f = sphere_field();
  auto mesh = extract_level(f, 0.0, Box3::cube(1.5), 64);
  auto rep = report_topology(mesh);
  REQUIRE(rep.component_count == 1);
  REQUIRE(rep.components[0].euler == 2);
  REQUIRE(rep.components[0].boundary_loops == 0);
  REQUIRE(rep.components[0].genus == 0);
  // linear-interpolation consistency: mesh vertices sit on the level set
  for (std::size_t i = 0; i < mesh.vertices.size(); i += 37) {
    double v = f.value(mesh.vertices[i]);
    REQUIRE(std::abs(v) < mesh.cell * 2.5);  // |grad| <= 2.5 near the sphere
  }
}

TEST_CASE("torus extracts with genus 1") {
  AnalyticField<3> f([](const Vec3& x) { return torus_implicit(x, 2, 1); },
                     [](const Vec3& x) {
                       double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
                       double a = 2 * (rho - 2) / std::max(rho, 1e-12);
                       return Vec3{a * x[0], a * x[1], 2 * x[2]};
                     },
                     nullptr);
  for (int res : {48, 96}) {  // stable under resolution doubling
    auto mesh = extract_level(f, 0.0, Box3::cube(3.4), res);
    auto rep = report_topology(mesh);
    REQUIRE(rep.component_count == 1);
    REQUIRE(rep.components[0].euler == 0);
    REQUIRE(rep.components[0].boundary_loops == 0);
    REQUIRE(rep.components[0].genus == 1);
  }
}

TEST_CASE("clipped cylinder is an annulus: chi 0, two boundary loops") {
  AnalyticField<3> f([](const Vec3& x) { return x[0] * x[0] + x[1] * x[1] - 1; },
                     [](const Vec3& x) { return Vec3{2 * x[0], 2 * x[1], 0}; },
                     nullptr);
  auto mesh = extract_level(f, 0.0, Box3::cube(1.5), 40);
  auto rep = report_topology(mesh);
  REQUIRE(rep.component_count == 1);
  REQUIRE(rep.components[0].euler == 0);
  REQUIRE(rep.components[0].boundary_loops == 2);
  REQUIRE(rep.components[0].genus == 0);
}

TEST_CASE("two disjoint spheres: additive topology") {
  auto s1 = sphere_field(Vec3{-1.2, 0, 0}, 0.7);
  auto s2 = sphere_field(Vec3{1.2, 0, 0}, 0.7);
  AnalyticField<3> prod(
      [&](const Vec3& x) { return std::min(s1.value(x), s2.value(x)); },
      [&](const Vec3& x) {
        return s1.value(x) < s2.value(x) ? s1.gradient(x) : s2.gradient(x);
      },
      nullptr);
  auto mesh = extract_level(prod, 0.0, Box3::cube(2.2), 56);
  auto rep = report_topology(mesh);
  REQUIRE(rep.component_count == 2);
  REQUIRE(rep.components[0].euler == 2);
  REQUIRE(rep.components[1].euler == 2);
}

TEST_CASE("empty level set gives an empty mesh, not an error") {
  auto f = sphere_field();
  auto mesh = extract_level(f, -5.0, Box3::cube(1.5), 16);
  REQUIRE(mesh.tris.empty());
  REQUIRE(report_topology(mesh).component_count == 0);
}

TEST_CASE("interior edges have exactly two incident triangles") {
  auto f = sphere_field();
  auto mesh = extract_level(f, 0.0, Box3::cube(1.5), 24);
  std::map<std::pair<int, int>, int> cnt;
  for (auto& t : mesh.tris)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      cnt[{std::min(a, b), std::max(a, b)}]++;
    }
  for (auto& [e, c] : cnt) REQUIRE(c == 2);  // closed surface: no boundary at all
}

TEST_CASE("joint curve of plane and cylinder is one closed circle") {
  AnalyticField<3> f1([](const Vec3& x) { return x[2]; },
                      [](const Vec3&) { return Vec3{0, 0, 1}; }, nullptr);
  AnalyticField<3> f2([](const Vec3& x) { return x[0] * x[0] + x[1] * x[1] - 1; },
                      [](const Vec3& x) { return Vec3{2 * x[0], 2 * x[1], 0}; },
                      nullptr);
  auto cs = extract_joint_curve(f1, f2, 0, 0, Box3::cube(1.6), 40);
  REQUIRE(cs.polylines.size() == 1);
  REQUIRE(cs.closed[0]);
  for (auto& p : cs.polylines[0]) {
    REQUIRE(std::abs(p[2]) < 1e-9);
    REQUIRE(std::sqrt(p[0] * p[0] + p[1] * p[1]) == Approx(1.0).margin(0.01));
  }
}

TEST_CASE("parallel planes do not intersect") {
  AnalyticField<3> f1([](const Vec3& x) { return x[2]; },
                      [](const Vec3&) { return Vec3{0, 0, 1}; }, nullptr);
  AnalyticField<3> f2([](const Vec3& x) { return x[2] - 3; },
                      [](const Vec3&) { return Vec3{0, 0, 1}; }, nullptr);
  auto cs = extract_joint_curve(f1, f2, 0, 0, Box3::cube(1.5), 24);
  REQUIRE(cs.polylines.empty());
}

TEST_CASE("gauss linking on the parametric Hopf pair") {
  // two (1,1)-curves on the torus R=2, r=1; they are Hopf linked
  auto curve = [](double phase) {
    std::vector<Vec3> c;
    int n = 256;
    for (int i = 0; i < n; ++i) {
      double t = 2 * kPi * i / n;
      double rho = 2 + std::cos(t + phase);
      c.push_back({rho * std::cos(t), rho * std::sin(t), std::sin(t + phase)});
    }
    return c;
  };
  auto a = curve(0), b = curve(kPi);
  double lk = gauss_linking(a, b);
  REQUIRE(std::abs(std::abs(lk) - 1.0) < 1e-6);
  // quadrature oracle agrees with the analytic solid-angle sum
  double lkq = gauss_linking_quadrature(a, b);
  REQUIRE(lk == Approx(lkq).margin(1e-4));
  // unlinked control: far-away circle
  std::vector<Vec3> far;
  for (int i = 0; i < 128; ++i) {
    double t = 2 * kPi * i / 128;
    far.push_back({10 + std::cos(t), std::sin(t), 0});
  }
  REQUIRE(std::abs(gauss_linking(a, far)) < 1e-6);
}

TEST_CASE("extracted torus-coordinate joint set is a Hopf pair with linking 1") {
  AnalyticField<3> f1([](const Vec3& x) { return torus_implicit(x, 2, 1); },
                      [](const Vec3&) { return Vec3{}; }, nullptr);
  AnalyticField<3> f2(
      [](const Vec3& x) {
        double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        return x[2] * x[0] - (rho - 2) * x[1];
      },
      [](const Vec3&) { return Vec3{}; }, nullptr);
  for (int res : {48, 96}) {
    auto cs = extract_joint_curve(f1, f2, 0, 0, Box3::cube(3.4), res);
    int closed = 0;
    for (auto c : cs.closed) closed += c ? 1 : 0;
    REQUIRE(closed == 2);
    auto rep = linking_report(cs);
    std::vector<int> idx;
    for (std::size_t i = 0; i < cs.closed.size(); ++i)
      if (cs.closed[i]) idx.push_back(int(i));
    REQUIRE(std::abs(rep.rounded[idx[0]][idx[1]]) == 1);
    REQUIRE(rep.max_dist_to_int < 0.2);
  }
}

TEST_CASE("linking is invariant under rigid rotation of the sampling box") {
  AnalyticField<3> f1([](const Vec3& x) { return torus_implicit(x, 2, 1); },
                      [](const Vec3&) { return Vec3{}; }, nullptr);
  AnalyticField<3> f2(
      [](const Vec3& x) {
        double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        return x[2] * x[0] - (rho - 2) * x[1];
      },
      [](const Vec3&) { return Vec3{}; }, nullptr);
  double ang = 0.41;
  auto rot = [&](const Vec3& x) {
    return Vec3{std::cos(ang) * x[0] - std::sin(ang) * x[1],
                std::sin(ang) * x[0] + std::cos(ang) * x[1], x[2]};
  };
  AnalyticField<3> g1([&](const Vec3& x) { return f1.value(rot(x)); },
                      [](const Vec3&) { return Vec3{}; }, nullptr);
  AnalyticField<3> g2([&](const Vec3& x) { return f2.value(rot(x)); },
                      [](const Vec3&) { return Vec3{}; }, nullptr);
  auto cs = extract_joint_curve(g1, g2, 0, 0, Box3::cube(3.4), 64);
  auto rep = linking_report(cs);
  std::vector<int> idx;
  for (std::size_t i = 0; i < cs.closed.size(); ++i)
    if (cs.closed[i]) idx.push_back(int(i));
  REQUIRE(idx.size() == 2);
  REQUIRE(std::abs(rep.rounded[idx[0]][idx[1]]) == 1);
}

TEST_CASE("marching squares: circle and open line") {
  AnalyticField<2> circ([](const Vec2& x) { return x.norm2() - 1; },
                        [](const Vec2& x) { return x * 2.0; }, nullptr);
  auto ps = extract_level2(circ, 0.0, Box2::cube(1.5), 48);
  REQUIRE(ps.polylines.size() == 1);
  REQUIRE(ps.closed[0]);
  AnalyticField<2> line([](const Vec2& x) { return x[1] - 0.3; },
                        [](const Vec2&) { return Vec2{0, 1}; }, nullptr);
  auto ps2 = extract_level2(line, 0.0, Box2::cube(1.0), 16);
  REQUIRE(ps2.polylines.size() == 1);
  REQUIRE_FALSE(ps2.closed[0]);
}

TEST_CASE("obj export writes vertices, faces and polylines") {
  auto f = sphere_field();
  auto mesh = extract_level(f, 0.0, Box3::cube(1.5), 12);
  write_obj(mesh, "/tmp/lf_test_sphere.obj");
  CurveSet cs;
  cs.polylines.push_back({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}});
  cs.closed.push_back(true);
  write_obj(cs, "/tmp/lf_test_curve.obj");
  std::FILE* fp = std::fopen("/tmp/lf_test_curve.obj", "r");
  REQUIRE(fp != nullptr);
  char line[128];
  REQUIRE(std::fgets(line, sizeof line, fp) != nullptr);
  REQUIRE(line[0] == 'v');
  std::fclose(fp);
}
