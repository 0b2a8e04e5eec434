#pragma once

// The local solution: superposition of domain Green's functions along the
// half-line charges inside each tentacle, v = sum_i integral G(x, y) dmu_i.
// Vanishes on the boundary, positive inside, and carries the gradient lower
// bound and saturation property that the stability flow consumes. Also the
// compact-level-set Dirichlet construction and the periodic pole variant.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "levelforge/green_solver.hpp"

namespace lf {

struct CollarCertificate {
  double c_grad = 0;    // min |grad v| over collar probes
  double c2_bound = 0;  // max Hessian Frobenius norm
  double eta = 0;       // min of v on the inner collar face
  bool saturation_ok = false;
  bool positive_ok = false;
  bool pass = false;
  int probes = 0;
  double width = 0;
  int band_components = 0;
};

class LineChargeSolution : public Field<3> {
 public:
  const TentacledDomain* domain = nullptr;
  KernelSpec spec;
  ChargeEnsemble<3> line_charges;  // interior quadrature nodes with weights
  ChargeEnsemble<3> mfs_charges;   // aggregated exterior correction
  PotentialField<3> combined;
  double boundary_residual = 0;
  double quad_estimate = 0;  // Richardson node-doubling difference
  int nodes_per_tentacle = 0;
  CollarCertificate collar;

  double value(const Vec3& x) const override { return combined.value(x); }
  Vec3 gradient(const Vec3& x) const override { return combined.gradient(x); }
  Mat<3> hessian(const Vec3& x) const override { return combined.hessian(x); }

  void rebuild_combined() {
    ChargeEnsemble<3> all = line_charges;
    all.append(mfs_charges);
    combined = PotentialField<3>(spec, all);
  }
};

namespace detail {

// quadrature along one tentacle line, geometrically clustered near the cap
// end via t = start + e^s (the integrand decays exponentially outward)
inline void line_quadrature(double start, double stop, int n,
                            std::vector<double>& t, std::vector<double>& w) {
  double s0 = std::log(0.05), s1 = std::log(stop - start + 0.05);
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  t.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gx[i];
    t[i] = start - 0.05 + std::exp(s);
    w[i] = gw[i] * 0.5 * (s1 - s0) * std::exp(s);
  }
}

struct LineBuild {
  ChargeEnsemble<3> line, mfs;
};

inline LineBuild solve_line_charges(const MfsSystem& sys,
                                    const std::vector<Vec3>& nodes,
                                    const std::vector<double>& weights) {
  const auto& fit = sys.fit_points();
  Eigen::MatrixXd rhs(fit.size(), nodes.size());
  parallel_for(fit.size(), [&](std::size_t r) {
    for (std::size_t q = 0; q < nodes.size(); ++q)
      rhs(r, q) = -free_green<3>(sys.spec(), fit[r].point, nodes[q]);
  });
  Eigen::MatrixXd W = sys.solve(rhs);
  LineBuild out;
  out.line.kind = ChargeKind::LineQuadrature;
  for (std::size_t q = 0; q < nodes.size(); ++q) out.line.add(nodes[q], weights[q]);
  for (std::size_t c = 0; c < sys.charge_points().size(); ++c) {
    double acc = 0;
    for (std::size_t q = 0; q < nodes.size(); ++q) acc += W(c, q) * weights[q];
    out.mfs.add(sys.charge_points()[c], acc);
  }
  return out;
}

}  // namespace detail

struct LocalSolveOptions {
  SolveOptions mfs;
  int max_nodes = 512;        // per tentacle, doubling cap
  double line_end_margin = 2.0;  // keep nodes this many cap radii from the lid
};

// Builds v by shared-matrix multi-pole MFS over the tentacle quadrature,
// doubling node counts until the Richardson estimate meets tol.
inline LineChargeSolution build_local_solution(const TentacledDomain& dom,
                                               KernelSpec spec, int quad_nodes,
                                               double tol,
                                               const LocalSolveOptions& opt = {}) {
  if (dom.tentacles.empty())
    throw std::invalid_argument("build_local_solution: domain has no tentacles");
  if (quad_nodes < 16)
    throw std::invalid_argument("build_local_solution: need >= 16 nodes per tentacle");
  MfsSystem sys(dom, spec, opt.mfs);

  // probes for the node-doubling estimate: mid-depth collar points
  std::vector<Vec3> probes;
  const auto& hold = sys.holdout_points();
  for (std::size_t i = 0; i < hold.size() && probes.size() < 24; i += hold.size() / 24 + 1)
    probes.push_back(hold[i].point - hold[i].normal * (0.25 * dom.char_radius()));

  auto assemble = [&](int n) {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    for (const auto& ten : dom.tentacles) {
      double r = ten.cap.profile.bounding_radius();
      double stop = ten.length - opt.line_end_margin * r;
      std::vector<double> t, w;
      detail::line_quadrature(1.0, stop, n, t, w);
      for (int q = 0; q < n; ++q) {
        nodes.push_back(ten.axis_point(t[q]));
        weights.push_back(w[q]);
      }
    }
    return detail::solve_line_charges(sys, nodes, weights);
  };

  int n = quad_nodes;
  detail::LineBuild cur = assemble(n);
  double est = 1e300;
  LineChargeSolution sol;
  sol.spec = spec;
  while (true) {
    detail::LineBuild next = assemble(2 * n);
    // compare v at probes between n and 2n nodes
    PotentialField<3> f1(spec, [&] {
      ChargeEnsemble<3> e = cur.line;
      e.append(cur.mfs);
      return e;
    }());
    PotentialField<3> f2(spec, [&] {
      ChargeEnsemble<3> e = next.line;
      e.append(next.mfs);
      return e;
    }());
    est = 0;
    for (const auto& p : probes) est = std::max(est, std::abs(f1.value(p) - f2.value(p)));
    cur = std::move(next);
    n *= 2;
    if (est <= tol * 0.5) break;
    if (2 * n > opt.max_nodes)
      throw SolverError("line quadrature did not converge (estimate " + fmt_g(est) +
                            "); double quadrature_nodes",
                        est);
  }
  sol.domain = &dom;
  sol.line_charges = cur.line;
  sol.mfs_charges = cur.mfs;
  sol.nodes_per_tentacle = n;
  sol.quad_estimate = est;
  sol.rebuild_combined();

  double res = 0;
  std::vector<double> hr(hold.size());
  parallel_for(hold.size(), [&](std::size_t i) {
    hr[i] = std::abs(sol.combined.value(hold[i].point));
  });
  for (double v : hr) res = std::max(res, v);
  sol.boundary_residual = res;
  if (res > tol)
    throw SolverError("local solution boundary residual " + fmt_g(res) +
                          " above tol " + fmt_g(tol),
                      res);
  return sol;
}

// The cylinder auxiliary: the ends of a two-sided straight cylinder carry one
// full line charge; by symmetry the resulting field is t-independent and
// equals the cap Green's function on cross-sections.
inline LineChargeSolution build_cylinder_auxiliary(const TentacledDomain& dom,
                                                   KernelSpec spec, int panels,
                                                   int nodes_per_panel, double tol,
                                                   const SolveOptions& mfs_opt) {
  if (dom.tentacles.size() != 2)
    throw std::invalid_argument("cylinder auxiliary needs a two-sided cylinder");
  MfsSystem sys(dom, spec, mfs_opt);
  const auto& t0 = dom.tentacles[0];
  double r = t0.cap.profile.bounding_radius();
  double reach = t0.length - 2.0 * r;
  Vec3 axis = t0.cap.normal;
  Vec3 origin = t0.cap.center;  // axis coordinate measured from here

  std::vector<double> gx, gw;
  gauss_legendre(nodes_per_panel, gx, gw);
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  double lo = -(reach + (t0.cap.center - dom.tentacles[1].cap.center).norm());
  double hi = reach;
  for (int p = 0; p < panels; ++p) {
    double a = lo + (hi - lo) * p / panels, b = lo + (hi - lo) * (p + 1) / panels;
    for (int i = 0; i < nodes_per_panel; ++i) {
      double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[i];
      nodes.push_back(origin + axis * t);
      weights.push_back(gw[i] * 0.5 * (b - a));
    }
  }
  auto built = detail::solve_line_charges(sys, nodes, weights);
  LineChargeSolution sol;
  sol.domain = &dom;
  sol.spec = spec;
  sol.line_charges = built.line;
  sol.mfs_charges = built.mfs;
  sol.nodes_per_tentacle = panels * nodes_per_panel;
  sol.rebuild_combined();
  double res = 0;
  for (const auto& h : sys.holdout_points())
    res = std::max(res, std::abs(sol.combined.value(h.point)));
  sol.boundary_residual = res;
  if (res > tol)
    throw SolverError("cylinder auxiliary residual " + fmt_g(res) + " above tol", res);
  return sol;
}

// ---- collar certificate ----------------------------------------------------

struct CollarOptions {
  int probes = 10000;
  std::uint64_t seed = 1;
  int sat_resolution = 48;
  Box3 sat_box = Box3::cube(3.0);
  double min_grad = 0.0;  // strictly positive by default
};

// Samples the inner collar, measures the gradient lower bound, the Hessian
// bound and the saturation height, then runs the grid saturation proxy:
// every component of {0 < v < eta} meeting the collar must stay inside the
// collar dilated by one cell.
inline CollarCertificate verify_collar(const Field<3>& v, const TentacledDomain& dom,
                                       double width, const CollarOptions& opt) {
  CollarCertificate cert;
  cert.width = width;
  Rng rng(opt.seed);
  auto samples = dom.boundary_sample(8.0 / sqr(dom.char_radius()));
  if (samples.empty()) throw std::invalid_argument("verify_collar: no boundary");

  cert.c_grad = 1e300;
  cert.eta = 1e300;
  cert.positive_ok = true;
  int used = 0;
  std::vector<Vec3> pts(opt.probes);
  std::vector<char> ok(opt.probes, 0);
  for (int i = 0; i < opt.probes; ++i) {
    const auto& s = samples[rng.uniform_int(int(samples.size()))];
    double depth = rng.uniform(0.03, 0.97) * width;
    pts[i] = s.point - s.normal * depth;
    ok[i] = dom.signed_gauge(pts[i]) < 0 ? 1 : 0;
  }
  std::vector<double> gn(opt.probes, 1e300), hn(opt.probes, 0), vv(opt.probes, 1);
  parallel_for(std::size_t(opt.probes), [&](std::size_t i) {
    if (!ok[i]) return;
    gn[i] = v.gradient(pts[i]).norm();
    hn[i] = v.hessian(pts[i]).frobenius();
    vv[i] = v.value(pts[i]);
  });
  for (int i = 0; i < opt.probes; ++i) {
    if (!ok[i]) continue;
    ++used;
    cert.c_grad = std::min(cert.c_grad, gn[i]);
    cert.c2_bound = std::max(cert.c2_bound, hn[i]);
    if (vv[i] <= 0) cert.positive_ok = false;
  }
  cert.probes = used;

  // saturation height: minimum of v on the inner collar face
  std::size_t stride = std::max<std::size_t>(1, samples.size() / 2000);
  for (std::size_t i = 0; i < samples.size(); i += stride) {
    Vec3 p = samples[i].point - samples[i].normal * width;
    if (dom.signed_gauge(p) > -0.5 * width) continue;  // face folded over a thin part
    cert.eta = std::min(cert.eta, v.value(p));
  }
  if (cert.eta == 1e300 || cert.eta <= 0) {
    cert.eta = 0;
    cert.pass = false;
    return cert;
  }

  // grid saturation proxy
  int R = opt.sat_resolution;
  Vec3 ext = opt.sat_box.extent();
  double hx = ext[0] / R, hy = ext[1] / R, hz = ext[2] / R;
  double cell = std::max({hx, hy, hz});
  std::vector<char> band(std::size_t(R) * R * R, 0), collar_cell(band.size(), 0),
      dilated(band.size(), 0);
  auto center = [&](int i, int j, int k) {
    return Vec3{opt.sat_box.lo[0] + (i + 0.5) * hx, opt.sat_box.lo[1] + (j + 0.5) * hy,
                opt.sat_box.lo[2] + (k + 0.5) * hz};
  };
  parallel_for(band.size(), [&](std::size_t idx) {
    int k = int(idx / (std::size_t(R) * R));
    int j = int((idx / R) % R);
    int i = int(idx % R);
    Vec3 c = center(i, j, k);
    double val = v.value(c);
    if (val > 0 && val < cert.eta) band[idx] = 1;
    double g = dom.signed_gauge(c);
    double diag = 0.87 * cell;
    if (g > -width - diag && g < diag) {
      collar_cell[idx] = 1;
      dilated[idx] = 1;
    }
    if (g > -width - 2.8 * diag && g < 2.8 * diag) dilated[idx] = 1;
  });
  detail::Dsu dsu(R * R * R);
  auto id = [&](int i, int j, int k) { return (k * R + j) * R + i; };
  for (int k = 0; k < R; ++k)
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < R; ++i) {
        if (!band[id(i, j, k)]) continue;
        if (i + 1 < R && band[id(i + 1, j, k)]) dsu.unite(id(i, j, k), id(i + 1, j, k));
        if (j + 1 < R && band[id(i, j + 1, k)]) dsu.unite(id(i, j, k), id(i, j + 1, k));
        if (k + 1 < R && band[id(i, j, k + 1)]) dsu.unite(id(i, j, k), id(i, j, k + 1));
      }
  std::map<int, bool> touches_collar, escapes;
  for (int idx = 0; idx < R * R * R; ++idx) {
    if (!band[idx]) continue;
    int root = dsu.find(idx);
    if (collar_cell[idx]) touches_collar[root] = true;
    if (!dilated[idx]) escapes[root] |= true;
    else escapes.emplace(root, false);
  }
  cert.band_components = int(touches_collar.size());
  cert.saturation_ok = true;
  for (auto& [root, touch] : touches_collar)
    if (touch && escapes[root]) cert.saturation_ok = false;

  cert.pass = cert.c_grad > opt.min_grad && cert.saturation_ok && cert.positive_ok &&
              cert.eta > 0 && used > opt.probes / 2;
  return cert;
}

// c0 = fraction x eta keeps the level set strictly inside the certified collar.
inline double choose_level(const CollarCertificate& cert, double fraction) {
  if (!cert.pass) throw std::invalid_argument("choose_level: collar certificate failed");
  if (!(fraction > 0 && fraction < 1))
    throw std::invalid_argument("choose_level: fraction must be in (0,1)");
  return fraction * cert.eta;
}

// ---- compact level sets (appendix construction) ----------------------------

struct CompactSolution : Field<3> {
  KernelSpec spec;
  double level = 0;  // boundary value c
  ChargeEnsemble<3> charges;
  PotentialField<3> field;
  FitReport fit;

  double value(const Vec3& x) const override { return field.value(x); }
  Vec3 gradient(const Vec3& x) const override { return field.gradient(x); }
  Mat<3> hessian(const Vec3& x) const override { return field.hessian(x); }
};

// Dirichlet data u = c on the boundary of a bounded smooth solid, k > 0;
// inside, the maximum principle keeps u strictly below c.
inline CompactSolution compact_component_solution(const TentacledDomain& dom,
                                                  KernelSpec spec, double c,
                                                  const SolveOptions& opt) {
  if (spec.yukawa_k <= 0)
    throw std::invalid_argument(
        "compact_component_solution: k must be positive (harmonic functions "
        "have no compact level sets)");
  if (!dom.tentacles.empty())
    throw std::invalid_argument("compact_component_solution: domain must be bounded");
  MfsSystem sys(dom, spec, opt);
  const auto& fit = sys.fit_points();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Constant(fit.size(), 1, c);
  Eigen::MatrixXd w = sys.solve(rhs);
  CompactSolution out;
  out.spec = spec;
  out.level = c;
  for (std::size_t i = 0; i < sys.charge_points().size(); ++i)
    out.charges.add(sys.charge_points()[i], w(i, 0));
  out.field = PotentialField<3>(spec, out.charges);
  double res = 0;
  for (const auto& h : sys.holdout_points())
    res = std::max(res, std::abs(out.field.value(h.point) - c));
  out.fit.residual_holdout = res;
  out.fit.collocation = int(fit.size());
  out.fit.charges = int(sys.charge_points().size());
  if (res > opt.fit_tol)
    throw SolverError("compact solution residual " + fmt_g(res) + " above tol", res);
  return out;
}

// ---- periodic pole variant --------------------------------------------------

// Dirichlet Green's function of a slab by the classical image series; the
// reflections are exterior charges of alternating sign.
inline MfsModel solve_green_slab(const TentacledDomain& dom, KernelSpec spec,
                                 const Vec3& pole, int reflections) {
  const Primitive* slab = nullptr;
  for (const auto& p : dom.core)
    if (p.type == Primitive::Type::Slab) slab = &p;
  if (!slab || !dom.tentacles.empty() || dom.core.size() != 1)
    throw std::invalid_argument("solve_green_slab: domain is not a slab");
  if (spec.yukawa_k <= 0)
    throw std::invalid_argument("solve_green_slab: image series needs k > 0");
  double s0 = pole.dot(slab->axis);
  double d = slab->hi - slab->lo;
  MfsModel m;
  m.spec = spec;
  m.pole = pole;
  // + images at s0 + 2md (m != 0), - images at 2 hi - s0 + 2md
  for (int mm = -reflections; mm <= reflections; ++mm) {
    if (mm != 0) m.exterior.add(pole + slab->axis * (2.0 * mm * d), 1.0);
    double sm = 2 * slab->hi - s0 + 2 * mm * d;
    m.exterior.add(pole + slab->axis * (sm - s0), -1.0);
  }
  ChargeEnsemble<3> all = m.exterior;
  all.add(pole, 1.0);
  m.total = PotentialField<3>(spec, all);
  Vec3 e1, e2;
  Cap tmp{0, Vec3{0, 0, 0}, slab->axis, {}};
  tmp.frame(e1, e2);
  Vec3 foot = pole - slab->axis * s0;
  double res = 0;
  for (double off : {0.0, 0.4, 0.9, 1.7})
    for (double level : {slab->lo, slab->hi})
      res = std::max(res, std::abs(m.total.value(foot + slab->axis * level + e1 * off)));
  m.fit.residual_holdout = res;
  m.fit.charges = int(m.exterior.size());
  return m;
}

// v for a periodic domain whose cell meets the boundary compactly: one pole
// per cell, summed over the truncated orbit.
inline LineChargeSolution build_periodic_pole_solution(const TentacledDomain& dom,
                                                       KernelSpec spec,
                                                       const Vec3& pole,
                                                       int reflections) {
  if (!dom.lattice) throw std::invalid_argument("periodic solution needs a lattice");
  MfsModel cell = solve_green_slab(dom, spec, pole, reflections);
  LineChargeSolution sol;
  sol.domain = &dom;
  sol.spec = spec;
  for (const Vec3& t : periodic_orbit(*dom.lattice, Vec3{0, 0, 0})) {
    sol.line_charges.add(pole + t, 1.0);
    for (const auto& e : cell.exterior.entries) sol.mfs_charges.add(e.location + t, e.weight);
  }
  sol.rebuild_combined();
  double res = 0;
  auto samples = dom.boundary_sample(24.0);
  std::size_t stride = std::max<std::size_t>(1, samples.size() / 400);
  for (std::size_t i = 0; i < samples.size(); i += stride)
    res = std::max(res, std::abs(sol.combined.value(samples[i].point)));
  sol.boundary_residual = res;
  return sol;
}

}  // namespace lf
