#pragma once

// Tentacled domains: a CSG core of smooth primitives plus straight
// semi-infinite cylindrical tentacles over disk caps, truncated at t_max for
// numerics, with an optional lattice of translations. The boundary is the
// zero set of a Lipschitz signed gauge; tentacle joints are smoothed by a
// fixed-radius fillet so the surface is numerically C^1.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "levelforge/core.hpp"

namespace lf {

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SdfVal {
  double d;
  Vec3 g;
};

namespace sdf {

inline Vec3 safe_unit(const Vec3& v, const Vec3& fallback) {
  double n = v.norm();
  return n > 1e-12 ? v / n : fallback;
}

inline SdfVal ball(const Vec3& p, const Vec3& c, double r) {
  Vec3 d = p - c;
  double n = d.norm();
  if (n < 1e-12) return {-r, Vec3{1, 0, 0}};
  return {n - r, d / n};
}

inline SdfVal capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  Vec3 pa = p - a, ba = b - a;
  double h = std::clamp(pa.dot(ba) / ba.norm2(), 0.0, 1.0);
  Vec3 q = pa - ba * h;
  double n = q.norm();
  if (n < 1e-12) {
    Vec3 axis = ba.normalized();
    Vec3 perp = std::abs(axis[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return {-r, safe_unit(cross(axis, perp), Vec3{1, 0, 0})};
  }
  return {n - r, q / n};
}

// Flat-capped cylinder from base point along unit axis, axial range [0, len].
inline SdfVal cylinder(const Vec3& p, const Vec3& base, const Vec3& axis,
                       double len, double r) {
  Vec3 pa = p - base;
  double t = pa.dot(axis);
  Vec3 q = pa - axis * t;
  double qr = q.norm();
  double rd = qr - r;
  double ad = std::max(-t, t - len);
  Vec3 rhat = qr > 1e-12 ? q / qr : Vec3{1, 0, 0};
  Vec3 ahat = (t - len > -t) ? axis : -axis;
  if (rd <= 0 && ad <= 0) {
    return rd > ad ? SdfVal{rd, rhat} : SdfVal{ad, ahat};
  }
  double rx = std::max(rd, 0.0), ax = std::max(ad, 0.0);
  double d = std::sqrt(rx * rx + ax * ax);
  return {d, (rhat * rx + ahat * ax) / (d > 1e-300 ? d : 1.0)};
}

inline SdfVal torus(const Vec3& p, const Vec3& c, const Vec3& axis, double R,
                    double r) {
  Vec3 pa = p - c;
  double z = pa.dot(axis);
  Vec3 rad = pa - axis * z;
  double rho = rad.norm();
  double a = rho - R;
  double q = std::sqrt(a * a + z * z);
  Vec3 rhat = rho > 1e-12 ? rad / rho : Vec3{1, 0, 0};
  if (q < 1e-12) return {-r, rhat};
  return {q - r, rhat * (a / q) + axis * (z / q)};
}

// Unbounded slab {lo < p.axis < hi}; intrinsically invariant under any
// in-plane translation.
inline SdfVal slab(const Vec3& p, const Vec3& axis, double lo, double hi) {
  double s = p.dot(axis);
  if (s - hi > lo - s) return {s - hi, axis};
  return {lo - s, -axis};
}

inline SdfVal round_box(const Vec3& p, const Vec3& c, const Vec3& half,
                        double round) {
  Vec3 q, sgn;
  for (int i = 0; i < 3; ++i) {
    double d = p[i] - c[i];
    sgn[i] = d >= 0 ? 1.0 : -1.0;
    q[i] = std::abs(d) - half[i];
  }
  double inner = std::max({q[0], q[1], q[2]});
  Vec3 qp;
  for (int i = 0; i < 3; ++i) qp[i] = std::max(q[i], 0.0);
  double outer = qp.norm();
  if (inner <= 0) {
    int k = q[0] >= q[1] && q[0] >= q[2] ? 0 : (q[1] >= q[2] ? 1 : 2);
    Vec3 g;
    g[k] = sgn[k];
    return {inner - round, g};
  }
  Vec3 g;
  for (int i = 0; i < 3; ++i) g[i] = sgn[i] * qp[i] / (outer > 1e-300 ? outer : 1.0);
  return {outer + std::min(inner, 0.0) - round, g};
}

// C^1 polynomial smooth min; k <= 0 degrades to a hard min.
inline SdfVal smooth_union(const SdfVal& a, const SdfVal& b, double k) {
  if (k <= 1e-12) return a.d <= b.d ? a : b;
  double h = std::clamp(0.5 + 0.5 * (b.d - a.d) / k, 0.0, 1.0);
  double d = b.d + (a.d - b.d) * h - k * h * (1 - h);
  return {d, a.g * h + b.g * (1 - h)};
}

inline SdfVal subtract(const SdfVal& a, const SdfVal& b, double k) {
  SdfVal nb{-b.d, -b.g};
  if (k <= 1e-12) return a.d >= nb.d ? a : nb;
  double h = std::clamp(0.5 + 0.5 * (a.d - nb.d) / k, 0.0, 1.0);
  double d = a.d + (nb.d - a.d) * h + k * h * (1 - h);
  return {d, a.g * (1 - h) + nb.g * h};
}

}  // namespace sdf

struct Primitive {
  enum class Type { Ball, Capsule, Cylinder, Torus, Slab, RoundBox };
  enum class Op { Union, Subtract };
  Type type = Type::Ball;
  Op op = Op::Union;
  double smooth = 0.0;  // blend radius against the running gauge
  Vec3 a, b;            // center / endpoints / base
  Vec3 axis{0, 0, 1};
  Vec3 half;            // box half-extents
  double r1 = 1.0, r2 = 0.0;
  double lo = 0.0, hi = 0.0;

  SdfVal eval(const Vec3& p) const {
    switch (type) {
      case Type::Ball:
        return sdf::ball(p, a, r1);
      case Type::Capsule:
        return sdf::capsule(p, a, b, r1);
      case Type::Cylinder:
        return sdf::cylinder(p, a, axis, hi, r1);
      case Type::Torus:
        return sdf::torus(p, a, axis, r1, r2);
      case Type::Slab:
        return sdf::slab(p, axis, lo, hi);
      case Type::RoundBox:
        return sdf::round_box(p, a, half, r2);
    }
    throw std::logic_error("unreachable");
  }
};

struct CapProfile {
  enum class Kind { Disk, Polygon };
  Kind kind = Kind::Disk;
  double radius = 1.0;
  std::vector<Vec2> polygon;  // CCW, in cap-plane coordinates

  bool contains(const Vec2& q) const {
    if (kind == Kind::Disk) return q.norm2() < radius * radius;
    bool in = false;
    std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 &pi = polygon[i], &pj = polygon[j];
      if ((pi[1] > q[1]) != (pj[1] > q[1]) &&
          q[0] < (pj[0] - pi[0]) * (q[1] - pi[1]) / (pj[1] - pi[1]) + pi[0])
        in = !in;
    }
    return in;
  }
  double bounding_radius() const {
    if (kind == Kind::Disk) return radius;
    double r = 0;
    for (auto& v : polygon) r = std::max(r, v.norm());
    return r;
  }
};

struct Cap {
  int id = 0;
  Vec3 center;
  Vec3 normal{0, 0, 1};  // outer normal of the tentacle
  CapProfile profile;

  // Deterministic orthonormal frame (e1, e2, normal).
  void frame(Vec3& e1, Vec3& e2) const {
    Vec3 ref = std::abs(normal[2]) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    e1 = cross(normal, ref).normalized();
    e2 = cross(normal, e1);
  }
};

struct Tentacle {
  Cap cap;
  double length = 0;  // truncation t_max measured from the cap plane
  double inset = 0;   // how far the cylinder is sunk into the core

  Vec3 axis_point(double t) const { return cap.center + cap.normal * t; }
};

struct HalfLine {
  Vec3 base;       // cap.center + normal (axial coordinate t = 1)
  Vec3 direction;  // the cap normal
  double t_max;    // absolute truncation along the tentacle
};

struct PeriodicLattice {
  std::vector<Vec3> generators;
  std::vector<Vec3> duals;
  int truncation_radius = 3;

  void compute_duals() {
    int l = static_cast<int>(generators.size());
    if (l < 1 || l > 2)
      throw ConstructionError("lattice rank must be 1 or 2 in dimension 3");
    Eigen::MatrixXd A(l, 3);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = generators[i][j];
    Eigen::MatrixXd G = A * A.transpose();
    Eigen::MatrixXd Gi = G.fullPivLu().solve(Eigen::MatrixXd::Identity(l, l));
    if ((G * Gi - Eigen::MatrixXd::Identity(l, l)).norm() > 1e-10)
      throw ConstructionError("lattice generators are not independent");
    Eigen::MatrixXd D = Gi * A;  // rows are the duals
    duals.resize(l);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < 3; ++j) duals[i][j] = D(i, j);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) {
        double want = i == j ? 1.0 : 0.0;
        if (std::abs(generators[i].dot(duals[j]) - want) > 1e-12)
          throw ConstructionError("dual lattice residual above 1e-12");
      }
  }
};

// Translates tau_t(x) for |t|_inf <= radius, lexicographic in t.
inline std::vector<Vec3> periodic_orbit(const PeriodicLattice& lat, const Vec3& x,
                                        int radius = -1) {
  int R = radius < 0 ? lat.truncation_radius : radius;
  int l = static_cast<int>(lat.generators.size());
  std::vector<Vec3> out;
  if (l == 1) {
    for (int t = -R; t <= R; ++t) out.push_back(x + lat.generators[0] * double(t));
  } else {
    for (int t1 = -R; t1 <= R; ++t1)
      for (int t2 = -R; t2 <= R; ++t2)
        out.push_back(x + lat.generators[0] * double(t1) + lat.generators[1] * double(t2));
  }
  return out;
}

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;     // outward unit normal (gauge increases along it)
  int tentacle = -1;  // wall/lid of tentacle i, or -1 for the core
  bool lid = false;
};

class TentacledDomain {
 public:
  std::vector<Primitive> core;
  std::vector<Tentacle> tentacles;
  std::optional<PeriodicLattice> lattice;
  double fillet = 0.0;
  double slab_patch_radius = 4.0;  // sampling window for unbounded primitives
  bool periodize_gauge = false;    // fold gauge over the lattice orbit
  std::string name = "domain";

  SdfVal gauge_eval(const Vec3& p) const {
    if (periodize_gauge && lattice) {
      SdfVal best{1e300, Vec3{1, 0, 0}};
      for (const Vec3& q : periodic_orbit(*lattice, Vec3{0, 0, 0}))
        best = sdf::smooth_union(best, cell_gauge(p - q), 0.0);
      return best;
    }
    return cell_gauge(p);
  }

  double signed_gauge(const Vec3& p) const { return gauge_eval(p).d; }
  Vec3 gauge_grad(const Vec3& p) const { return gauge_eval(p).g; }
  bool inside(const Vec3& p) const { return signed_gauge(p) < 0; }

  // Newton projection onto the boundary; returns false if it fails to land.
  bool project_to_boundary(Vec3& p, double tol = 1e-10, int iters = 25) const {
    for (int i = 0; i < iters; ++i) {
      SdfVal s = gauge_eval(p);
      if (std::abs(s.d) < tol) return true;
      double g2 = s.g.norm2();
      if (g2 < 1e-12) return false;
      p -= s.g * (s.d / g2);
    }
    return std::abs(signed_gauge(p)) < tol * 10;
  }

  double char_radius() const {
    double r = 1e300;
    for (const auto& t : tentacles) r = std::min(r, t.cap.profile.bounding_radius());
    if (tentacles.empty())
      for (const auto& c : core) {
        if (c.type == Primitive::Type::Ball || c.type == Primitive::Type::Capsule ||
            c.type == Primitive::Type::Cylinder)
          r = std::min(r, c.r1);
        else if (c.type == Primitive::Type::Torus)
          r = std::min(r, c.r2);
        else if (c.type == Primitive::Type::Slab)
          r = std::min(r, 0.5 * (c.hi - c.lo));
        else
          r = std::min(r, c.r2 > 0 ? c.r2 : c.half.norm() * 0.25);
      }
    return r;
  }

  std::vector<HalfLine> half_lines() const {
    std::vector<HalfLine> out;
    for (const auto& t : tentacles)
      out.push_back({t.cap.center + t.cap.normal, t.cap.normal, t.length});
    return out;
  }

  std::vector<SurfaceSample> boundary_sample(double density) const;

  // Pairwise disjointness of the outward tentacle regions (the numerical
  // surrogate for disjoint half-space regions): sampled emptiness check.
  void check_tentacle_separation(double margin) const {
    for (std::size_t i = 0; i < tentacles.size(); ++i)
      for (std::size_t j = i + 1; j < tentacles.size(); ++j) {
        double ri = tentacles[i].cap.profile.bounding_radius();
        double rj = tentacles[j].cap.profile.bounding_radius();
        double d = segment_distance(tentacles[i], tentacles[j]);
        if (d < ri + rj + margin)
          throw ConstructionError("tentacles " + std::to_string(i) + " and " +
                                  std::to_string(j) + " collide (axis distance " +
                                  fmt_g(d) + ")");
      }
  }

 private:
  SdfVal cell_gauge(const Vec3& p) const {
    SdfVal acc{1e300, Vec3{1, 0, 0}};
    bool first = true;
    for (const auto& prim : core) {
      SdfVal s = prim.eval(p);
      if (first && prim.op == Primitive::Op::Union) {
        acc = s;
        first = false;
      } else if (prim.op == Primitive::Op::Union) {
        acc = sdf::smooth_union(acc, s, prim.smooth);
      } else {
        acc = sdf::subtract(acc, s, prim.smooth);
      }
    }
    for (const auto& t : tentacles) {
      // capsule: straight wall with a round far Dirichlet lid, keeping the
      // truncated boundary C^1
      Vec3 base = t.cap.center - t.cap.normal * t.inset;
      SdfVal s = sdf::capsule(p, base, t.axis_point(t.length),
                              t.cap.profile.bounding_radius());
      acc = sdf::smooth_union(acc, s, fillet);
    }
    return acc;
  }

  static double segment_distance(const Tentacle& a, const Tentacle& b) {
    // distance between the two axis segments, coarse sampled + refined
    double best = 1e300;
    for (int i = 0; i <= 32; ++i) {
      Vec3 pa = a.axis_point(a.length * i / 32.0);
      for (int j = 0; j <= 32; ++j)
        best = std::min(best, (pa - b.axis_point(b.length * j / 32.0)).norm());
    }
    return best;
  }
};

inline std::vector<SurfaceSample> TentacledDomain::boundary_sample(double density) const {
  std::vector<SurfaceSample> out;
  double spacing = 1.0 / std::sqrt(density);
  auto emit = [&](Vec3 p, int tentacle, bool lid) {
    // reject points swallowed by another part of the union, then polish
    double g = signed_gauge(p);
    if (g < -0.6 * std::max(fillet, spacing)) return;
    if (!project_to_boundary(p, 1e-11)) return;
    SdfVal s = gauge_eval(p);
    if (s.g.norm() < 1e-6) return;
    out.push_back({p, s.g.normalized(), tentacle, lid});
  };

  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (const auto& prim : core) {
    if (prim.op == Primitive::Op::Subtract) continue;  // cavity walls handled by projection of neighbors
    switch (prim.type) {
      case Primitive::Type::Ball: {
        int n = std::max(8, int(4 * kPi * prim.r1 * prim.r1 * density));
        for (int i = 0; i < n; ++i) {
          double z = 1.0 - 2.0 * (i + 0.5) / n;
          double rho = std::sqrt(std::max(0.0, 1 - z * z));
          double phi = golden * i;
          emit(prim.a + Vec3{rho * std::cos(phi), rho * std::sin(phi), z} * prim.r1, -1, false);
        }
        break;
      }
      case Primitive::Type::Capsule: {
        Vec3 ba = prim.b - prim.a;
        double len = ba.norm();
        Vec3 u = ba / len;
        Vec3 e1, e2;
        Cap tmp{0, prim.a, u, {}};
        tmp.frame(e1, e2);
        int na = std::max(2, int(len / spacing));
        int nc = std::max(8, int(2 * kPi * prim.r1 / spacing));
        for (int i = 0; i < na; ++i) {
          double t = len * (i + 0.5) / na;
          for (int j = 0; j < nc; ++j) {
            double phi = 2 * kPi * (j + (i % 2) * 0.5) / nc;
            emit(prim.a + u * t + (e1 * std::cos(phi) + e2 * std::sin(phi)) * prim.r1, -1, false);
          }
        }
        int nh = std::max(8, int(2 * kPi * prim.r1 * prim.r1 * density));
        for (int s = 0; s < 2; ++s) {
          Vec3 c = s == 0 ? prim.a : prim.b;
          Vec3 dir = s == 0 ? -u : u;
          for (int i = 0; i < nh; ++i) {
            double z = (i + 0.5) / nh;  // only the outward hemisphere
            double rho = std::sqrt(std::max(0.0, 1 - z * z));
            double phi = golden * i;
            Vec3 q = dir * z + e1 * (rho * std::cos(phi)) + e2 * (rho * std::sin(phi));
            emit(c + q * prim.r1, -1, false);
          }
        }
        break;
      }
      case Primitive::Type::Torus: {
        int nt = std::max(12, int(2 * kPi * prim.r1 / spacing));
        int np = std::max(8, int(2 * kPi * prim.r2 / spacing));
        Vec3 e1, e2;
        Cap tmp{0, prim.a, prim.axis, {}};
        tmp.frame(e1, e2);
        for (int i = 0; i < nt; ++i) {
          double th = 2 * kPi * (i + 0.5) / nt;
          Vec3 ring = e1 * std::cos(th) + e2 * std::sin(th);
          for (int j = 0; j < np; ++j) {
            double ph = 2 * kPi * (j + (i % 2) * 0.5) / np;
            Vec3 p = prim.a + ring * (prim.r1 + prim.r2 * std::cos(ph)) +
                     prim.axis * (prim.r2 * std::sin(ph));
            emit(p, -1, false);
          }
        }
        break;
      }
      case Primitive::Type::Slab: {
        Vec3 e1, e2;
        Cap tmp{0, Vec3{0, 0, 0}, prim.axis, {}};
        tmp.frame(e1, e2);
        int n = std::max(2, int(2 * slab_patch_radius / spacing));
        for (int s = 0; s < 2; ++s) {
          double level = s == 0 ? prim.lo : prim.hi;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              double u = -slab_patch_radius + (i + 0.5) * 2 * slab_patch_radius / n;
              double v = -slab_patch_radius + (j + 0.5) * 2 * slab_patch_radius / n;
              if (u * u + v * v > slab_patch_radius * slab_patch_radius) continue;
              emit(prim.axis * level + e1 * u + e2 * v, -1, false);
            }
        }
        break;
      }
      case Primitive::Type::Cylinder: {
        Vec3 e1, e2;
        Cap tmp{0, prim.a, prim.axis, {}};
        tmp.frame(e1, e2);
        int na = std::max(2, int(prim.hi / spacing));
        int nc = std::max(8, int(2 * kPi * prim.r1 / spacing));
        for (int i = 0; i < na; ++i)
          for (int j = 0; j < nc; ++j) {
            double phi = 2 * kPi * (j + (i % 2) * 0.5) / nc;
            emit(prim.a + prim.axis * (prim.hi * (i + 0.5) / na) +
                     (e1 * std::cos(phi) + e2 * std::sin(phi)) * prim.r1,
                 -1, false);
          }
        break;
      }
      case Primitive::Type::RoundBox: {
        for (int axis = 0; axis < 3; ++axis)
          for (int s = -1; s <= 1; s += 2) {
            int u = (axis + 1) % 3, v = (axis + 2) % 3;
            int nu = std::max(2, int(2 * prim.half[u] / spacing));
            int nv = std::max(2, int(2 * prim.half[v] / spacing));
            for (int i = 0; i < nu; ++i)
              for (int j = 0; j < nv; ++j) {
                Vec3 p = prim.a;
                p[axis] += s * (prim.half[axis] + prim.r2);
                p[u] += -prim.half[u] + (i + 0.5) * 2 * prim.half[u] / nu;
                p[v] += -prim.half[v] + (j + 0.5) * 2 * prim.half[v] / nv;
                emit(p, -1, false);
              }
          }
        break;
      }
    }
  }

  for (std::size_t ti = 0; ti < tentacles.size(); ++ti) {
    const auto& t = tentacles[ti];
    double r = t.cap.profile.bounding_radius();
    Vec3 e1, e2;
    t.cap.frame(e1, e2);
    int na = std::max(2, int(t.length / spacing));
    int nc = std::max(8, int(2 * kPi * r / spacing));
    for (int i = 0; i < na; ++i) {
      double ax = t.length * (i + 0.5) / na;
      for (int j = 0; j < nc; ++j) {
        double phi = 2 * kPi * (j + (i % 2) * 0.5) / nc;
        emit(t.axis_point(ax) + (e1 * std::cos(phi) + e2 * std::sin(phi)) * r, int(ti), false);
      }
    }
    // round far Dirichlet lid (hemisphere beyond t_max)
    int nl = std::max(4, int(2 * kPi * r * r * density));
    for (int i = 0; i < nl; ++i) {
      double z = (i + 0.5) / nl;
      double rho = std::sqrt(std::max(0.0, 1 - z * z));
      double phi = golden * i;
      Vec3 q = t.cap.normal * z + e1 * (rho * std::cos(phi)) + e2 * (rho * std::sin(phi));
      out.push_back({t.axis_point(t.length) + q * r, q, int(ti), true});
    }
  }
  return out;
}

// --- fixture builders ---------------------------------------------------

struct TorusEndsOptions {
  double tube_radius = 0.5;       // x scale
  double major_radius = 1.2;      // x scale
  double chain_spacing = 2.7;     // x scale, single-overlap gluing
  double tentacle_radius = 0.45;  // x scale
  double t_max_factor = 12.0;     // x cap diameter
  double fillet_factor = 0.1;     // x cap radius
  std::vector<double> end_angles;  // default: uniform in the xy plane
};

// Genus-g core (a chain of g solid tori; a ball for g = 0) with `ends`
// cylindrical tentacles radiating in the xy plane.
inline TentacledDomain build_torus_with_ends(int genus, int ends, double scale,
                                             TorusEndsOptions opt = {}) {
  if (genus < 0 || ends < 1 || scale <= 0)
    throw ConstructionError("build_torus_with_ends: bad parameters");
  TentacledDomain dom;
  dom.name = "torus_g" + std::to_string(genus) + "_n" + std::to_string(ends);
  double rt = opt.tentacle_radius * scale;
  dom.fillet = opt.fillet_factor * rt;

  if (genus == 0) {
    Primitive ball;
    ball.type = Primitive::Type::Ball;
    ball.a = Vec3{0, 0, 0};
    ball.r1 = opt.major_radius * scale;
    dom.core.push_back(ball);
  } else {
    double spacing = opt.chain_spacing * scale;
    for (int i = 0; i < genus; ++i) {
      Primitive t;
      t.type = Primitive::Type::Torus;
      t.a = Vec3{(i - 0.5 * (genus - 1)) * spacing, 0, 0};
      t.axis = Vec3{0, 0, 1};
      t.r1 = opt.major_radius * scale;
      t.r2 = opt.tube_radius * scale;
      t.smooth = 0.05 * scale;
      dom.core.push_back(t);
    }
  }

  std::vector<double> angles = opt.end_angles;
  if (angles.empty())
    for (int i = 0; i < ends; ++i) angles.push_back(2 * kPi * i / ends);
  if (static_cast<int>(angles.size()) != ends)
    throw ConstructionError("end_angles size mismatch");

  // anchors are computed against the core alone so overlapping tentacle
  // requests still reach the collision check below
  TentacledDomain core_only;
  core_only.core = dom.core;
  for (int i = 0; i < ends; ++i) {
    Vec3 dir{std::cos(angles[i]), std::sin(angles[i]), 0};
    // anchor: outermost core boundary crossing along the ray (fall back to
    // the nearest torus center if the ray from the origin misses the solid)
    auto crossing = [&](const Vec3& origin) -> std::optional<double> {
      double t_hi = (opt.major_radius + opt.tube_radius) * scale * (genus + 2);
      double prev = core_only.signed_gauge(origin + dir * t_hi);
      if (prev < 0) return std::nullopt;
      double t_in = -1;
      for (double t = t_hi; t >= 0; t -= 0.02 * scale) {
        if (core_only.signed_gauge(origin + dir * t) < 0) {
          t_in = t;
          break;
        }
      }
      if (t_in < 0) return std::nullopt;
      double a = t_in, b = std::min(t_hi, t_in + 0.02 * scale * 2);
      for (int it = 0; it < 60; ++it) {
        double m = 0.5 * (a + b);
        (core_only.signed_gauge(origin + dir * m) < 0 ? a : b) = m;
      }
      return 0.5 * (a + b);
    };
    Vec3 origin{0, 0, 0};
    auto t0 = crossing(origin);
    if (!t0 && genus >= 1) {
      double best = 1e300;
      for (const auto& prim : dom.core) {
        double d = (prim.a - origin).dot(dir);
        if (std::abs(d) < best) {
          best = std::abs(d);
          origin = prim.a;
        }
      }
      t0 = crossing(origin);
    }
    if (!t0) throw ConstructionError("tentacle ray misses the core");
    Tentacle ten;
    ten.cap.id = i;
    ten.cap.center = origin + dir * (*t0);
    ten.cap.normal = dir;
    ten.cap.profile.kind = CapProfile::Kind::Disk;
    ten.cap.profile.radius = rt;
    ten.length = opt.t_max_factor * 2 * rt;
    ten.inset = rt;
    dom.tentacles.push_back(ten);
  }
  dom.check_tentacle_separation(0.1 * scale);
  return dom;
}

// Straight circular cylinder of the given radius: a capsule core continued
// by tentacles, so the wall is exactly a cylinder. `two_sided` adds ends in
// both axis directions.
inline TentacledDomain make_straight_cylinder(double radius, double t_max,
                                              bool two_sided,
                                              const Vec3& axis = Vec3{0, 0, 1}) {
  TentacledDomain dom;
  dom.name = two_sided ? "cylinder_two_sided" : "cylinder_one_sided";
  dom.fillet = 0;  // capsule is already inscribed in the tentacle cylinders
  Primitive cap;
  cap.type = Primitive::Type::Capsule;
  cap.a = -axis * (two_sided ? 0.5 : 1.0);
  cap.b = axis * 0.5;
  cap.r1 = radius;
  dom.core.push_back(cap);
  auto add = [&](const Vec3& dir, int id) {
    Tentacle t;
    t.cap.id = id;
    t.cap.center = dir * 0.5;
    t.cap.normal = dir;
    t.cap.profile.radius = radius;
    t.length = t_max - 0.5;
    t.inset = radius + (two_sided ? 0.6 : 0.0);
    dom.tentacles.push_back(t);
  };
  add(axis, 0);
  if (two_sided) add(-axis, 1);
  return dom;
}

inline TentacledDomain make_ball_domain(double radius) {
  TentacledDomain dom;
  dom.name = "ball";
  Primitive ball;
  ball.type = Primitive::Type::Ball;
  ball.r1 = radius;
  dom.core.push_back(ball);
  return dom;
}

// Periodic slab {lo < x.axis < hi}, invariant under the given in-plane
// lattice generators.
inline TentacledDomain make_slab_domain(const Vec3& axis, double lo, double hi,
                                        const std::vector<Vec3>& generators,
                                        int truncation_radius,
                                        double patch_radius) {
  TentacledDomain dom;
  dom.name = "slab";
  Primitive s;
  s.type = Primitive::Type::Slab;
  s.axis = axis.normalized();
  s.lo = lo;
  s.hi = hi;
  dom.core.push_back(s);
  PeriodicLattice lat;
  lat.generators = generators;
  lat.truncation_radius = truncation_radius;
  lat.compute_duals();
  dom.lattice = lat;
  dom.periodize_gauge = false;  // the slab gauge is intrinsically periodic
  dom.slab_patch_radius = patch_radius;
  return dom;
}

}  // namespace lf
