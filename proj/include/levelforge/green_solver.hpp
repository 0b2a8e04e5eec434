#pragma once

// Numerical Dirichlet Green's function of (Laplacian - k^2) on a tentacled
// domain by the method of fundamental solutions: exterior charges fitted by
// regularized least squares against the boundary trace, with held-out
// collocation as the achieved-residual measure. The semi-infinite tentacles
// carry a far Dirichlet lid at t_max whose influence is certified negligible
// against the verified exponential decay.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "levelforge/cap_spectrum.hpp"
#include "levelforge/field.hpp"
#include "levelforge/geometry.hpp"

namespace lf {

struct SolveOptions {
  double fit_tol = 1e-6;
  double density = 16.0;        // collocation points per unit boundary area
  double charge_offset = 0.5;   // offset distance, x char radius
  double charge_ratio = 2.0;    // charges per fit collocation point
  double rank_threshold = 1e-12;  // relative pivot cutoff of the QR
  double cond_limit = 1e15;
};

struct FitReport {
  double residual_fit = 0;
  double residual_holdout = 0;
  double cond_estimate = 0;
  int collocation = 0;
  int holdout = 0;
  int charges = 0;
};

struct SolverError : std::runtime_error {
  double achieved;
  SolverError(const std::string& msg, double a) : std::runtime_error(msg), achieved(a) {}
};

// Shared collocation geometry + factorization; the matrix depends only on
// the domain, so any number of right-hand sides reuse one decomposition.
class MfsSystem {
 public:
  MfsSystem(const TentacledDomain& dom, KernelSpec spec, const SolveOptions& opt)
      : dom_(&dom), spec_(spec), opt_(opt) {
    spec_.validate();
    auto samples = dom.boundary_sample(opt.density);
    if (samples.size() < 32) throw SolverError("too few boundary samples", 0);
    for (std::size_t i = 0; i < samples.size(); ++i)
      (i % 2 == 0 ? fit_ : holdout_).push_back(samples[i]);

    double offset = opt.charge_offset * dom.char_radius();
    // ratio <= 1: subsample the collocation; ratio > 1: extra offset shells
    int shells = std::max(1, int(std::lround(opt.charge_ratio)));
    int stride = std::max(1, int(std::lround(1.0 / opt.charge_ratio)));
    auto place = [&](const SurfaceSample& s, double d0) {
      Vec3 z = s.point + s.normal * d0;
      double d = d0;
      for (int tries = 0; tries < 4 && dom.signed_gauge(z) < 0.25 * d; ++tries) {
        d *= 0.5;
        z = s.point + s.normal * d;
      }
      if (dom.signed_gauge(z) > 0) charges_.push_back(z);  // strictly exterior
    };
    for (std::size_t i = 0; i < fit_.size(); i += stride)
      for (int sh = 0; sh < shells; ++sh)
        place(fit_[i], offset * (1.0 + 0.7 * sh));
    if (charges_.empty()) throw SolverError("no exterior charge sites", 0);

    A_.resize(fit_.size(), charges_.size());
    parallel_for(fit_.size(), [&](std::size_t r) {
      for (std::size_t c = 0; c < charges_.size(); ++c)
        A_(r, c) = free_green<3>(spec_, fit_[r].point, charges_[c]);
    });
    cod_.setThreshold(opt.rank_threshold);
    cod_.compute(A_);
    const auto& R = cod_.matrixQTZ();
    int rank = int(cod_.rank());
    cond_ = rank > 0 ? std::abs(R(0, 0) / R(rank - 1, rank - 1)) : 1e300;
    if (cond_ > opt.cond_limit)
      throw SolverError("collocation system condition estimate " + fmt_g(cond_) +
                            " above limit after regularization",
                        cond_);
  }

  // one weight column per right-hand-side column
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return cod_.solve(rhs); }

  const std::vector<SurfaceSample>& fit_points() const { return fit_; }
  const std::vector<SurfaceSample>& holdout_points() const { return holdout_; }
  const std::vector<Vec3>& charge_points() const { return charges_; }
  const KernelSpec& spec() const { return spec_; }
  const TentacledDomain& domain() const { return *dom_; }
  double cond_estimate() const { return cond_; }
  const SolveOptions& options() const { return opt_; }

 private:
  const TentacledDomain* dom_;
  KernelSpec spec_;
  SolveOptions opt_;
  std::vector<SurfaceSample> fit_, holdout_;
  std::vector<Vec3> charges_;
  Eigen::MatrixXd A_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  double cond_ = 0;
};

// G_Omega(., pole) as a charge superposition; the pole itself carries unit
// weight, everything else is the exterior correction.
struct MfsModel : Field<3> {
  KernelSpec spec;
  Vec3 pole;
  ChargeEnsemble<3> exterior;
  FitReport fit;
  PotentialField<3> total;  // pole + exterior

  double value(const Vec3& x) const override { return total.value(x); }
  Vec3 gradient(const Vec3& x) const override { return total.gradient(x); }
  Mat<3> hessian(const Vec3& x) const override { return total.hessian(x); }
};

inline MfsModel solve_green(const MfsSystem& sys, const Vec3& pole, double fit_tol) {
  const auto& dom = sys.domain();
  if (!dom.inside(pole)) throw SolverError("pole not inside the domain", 0);
  if (std::abs(dom.signed_gauge(pole)) < 0.05 * dom.char_radius())
    throw SolverError("pole too close to the boundary", 0);

  const auto& fit = sys.fit_points();
  Eigen::MatrixXd rhs(fit.size(), 1);
  for (std::size_t r = 0; r < fit.size(); ++r)
    rhs(r, 0) = -free_green<3>(sys.spec(), fit[r].point, pole);
  Eigen::MatrixXd w = sys.solve(rhs);

  MfsModel m;
  m.spec = sys.spec();
  m.pole = pole;
  for (std::size_t c = 0; c < sys.charge_points().size(); ++c)
    m.exterior.add(sys.charge_points()[c], w(c, 0));
  ChargeEnsemble<3> all = m.exterior;
  all.add(pole, 1.0);
  m.total = PotentialField<3>(sys.spec(), all);

  m.fit.collocation = int(fit.size());
  m.fit.holdout = int(sys.holdout_points().size());
  m.fit.charges = int(sys.charge_points().size());
  m.fit.cond_estimate = sys.cond_estimate();
  double rf = 0, rh = 0;
  for (std::size_t r = 0; r < fit.size(); ++r)
    rf = std::max(rf, std::abs(free_green<3>(sys.spec(), fit[r].point, pole) +
                               [&] {
                                 double s = 0;
                                 for (std::size_t c = 0; c < sys.charge_points().size(); ++c)
                                   s += w(c, 0) * free_green<3>(sys.spec(), fit[r].point,
                                                                sys.charge_points()[c]);
                                 return s;
                               }()));
  std::vector<double> hold(sys.holdout_points().size());
  parallel_for(hold.size(), [&](std::size_t i) {
    hold[i] = std::abs(m.total.value(sys.holdout_points()[i].point));
  });
  for (double h : hold) rh = std::max(rh, h);
  m.fit.residual_fit = rf;
  m.fit.residual_holdout = rh;
  if (rh > fit_tol)
    throw SolverError("boundary residual " + fmt_g(rh) + " above fit_tol " +
                          fmt_g(fit_tol),
                      rh);
  return m;
}

inline MfsModel solve_green(const TentacledDomain& dom, KernelSpec spec,
                            const Vec3& pole, const SolveOptions& opt) {
  MfsSystem sys(dom, spec, opt);
  return solve_green(sys, pole, opt.fit_tol);
}

// ---- decay verification ---------------------------------------------------

struct DecayReport {
  struct PerTentacle {
    int tentacle = -1;
    double slope = 0, slope_grad = 0, slope_hess = 0;
    double window_lo = 0, window_hi = 0;
    int points = 0;
    bool shortened = false;  // value floor reached before 10 e-foldings
  };
  std::vector<PerTentacle> axis;
  std::vector<double> cross_slopes;  // probes in tentacles away from the pole
  double decay_rate = 0;
  bool pass = false;
};

namespace detail {

inline double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  double n = double(t.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sx += t[i];
    sy += y[i];
    sxx += t[i] * t[i];
    sxy += t[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

// Fits the axial slope of log G along each tentacle; PASS iff every slope
// is at most -0.9 x predicted decay rate.
inline DecayReport verify_decay(const Field<3>& green, const TentacledDomain& dom,
                                const SpectralBound& bound, int axis_samples,
                                double value_floor) {
  DecayReport rep;
  rep.decay_rate = bound.decay_rate;
  bool all_ok = true;
  for (std::size_t ti = 0; ti < dom.tentacles.size(); ++ti) {
    const auto& ten = dom.tentacles[ti];
    double r = ten.cap.profile.bounding_radius();
    double t0 = 1.5 * r;
    double t1 = ten.length - 2.0 * r;
    DecayReport::PerTentacle pt;
    pt.tentacle = int(ti);
    std::vector<double> ts, lv, lg, lh;
    for (int i = 0; i < axis_samples; ++i) {
      double t = t0 + (t1 - t0) * i / std::max(1, axis_samples - 1);
      Vec3 x = ten.axis_point(t);
      double v = green.value(x);
      if (v < value_floor) {
        pt.shortened = true;
        break;
      }
      ts.push_back(t);
      lv.push_back(std::log(v));
      lg.push_back(std::log(std::max(green.gradient(x).norm(), 1e-300)));
      lh.push_back(std::log(std::max(green.hessian(x).frobenius(), 1e-300)));
    }
    if (ts.size() >= 4) {
      pt.slope = detail::fit_slope(ts, lv);
      pt.slope_grad = detail::fit_slope(ts, lg);
      pt.slope_hess = detail::fit_slope(ts, lh);
      pt.window_lo = ts.front();
      pt.window_hi = ts.back();
      pt.points = int(ts.size());
      if (!pt.shortened && (ts.back() - ts.front()) * bound.decay_rate < 10)
        pt.shortened = true;
      if (pt.slope > -0.9 * bound.decay_rate) all_ok = false;
    } else {
      pt.shortened = true;
    }
    rep.axis.push_back(pt);
  }
  // cross-tentacle decay, reported only
  for (std::size_t ti = 1; ti < dom.tentacles.size(); ++ti) {
    const auto& ten = dom.tentacles[ti];
    std::vector<double> ts, lv;
    for (int i = 0; i < 8; ++i) {
      double t = 0.5 + 0.35 * i;
      double v = green.value(ten.axis_point(t));
      if (v < value_floor) break;
      ts.push_back(t);
      lv.push_back(std::log(v));
    }
    if (ts.size() >= 3) rep.cross_slopes.push_back(detail::fit_slope(ts, lv));
  }
  rep.pass = all_ok && !rep.axis.empty();
  return rep;
}

// ---- cap Green's function (cross-section solve, dimension n-1) ------------

// G_Lambda(., pole) on a cap profile via 2-D MFS; realizes the cylinder
// auxiliary function through the cross-section identity.
struct CapGreenModel : Field<2> {
  KernelSpec spec;  // dimension 2
  Vec2 pole;
  ChargeEnsemble<2> exterior;
  FitReport fit;
  PotentialField<2> total;

  double value(const Vec2& x) const override { return total.value(x); }
  Vec2 gradient(const Vec2& x) const override { return total.gradient(x); }
  Mat<2> hessian(const Vec2& x) const override { return total.hessian(x); }
};

inline CapGreenModel solve_cap_green(const CapProfile& prof, double k,
                                     const Vec2& pole, double fit_tol,
                                     int collocation = 256) {
  if (!prof.contains(pole))
    throw SolverError("cap pole outside the profile", 0);
  KernelSpec spec{2, k};
  std::vector<Vec2> colloc, normals;
  if (prof.kind == CapProfile::Kind::Disk) {
    for (int i = 0; i < collocation; ++i) {
      double a = 2 * kPi * (i + 0.5) / collocation;
      Vec2 n{std::cos(a), std::sin(a)};
      colloc.push_back(n * prof.radius);
      normals.push_back(n);
    }
  } else {
    double perim = 0;
    std::size_t m = prof.polygon.size();
    for (std::size_t e = 0; e < m; ++e)
      perim += (prof.polygon[(e + 1) % m] - prof.polygon[e]).norm();
    for (std::size_t e = 0; e < m; ++e) {
      Vec2 a = prof.polygon[e], b = prof.polygon[(e + 1) % m];
      Vec2 d = b - a;
      int ne = std::max(2, int(std::lround(collocation * d.norm() / perim)));
      Vec2 n = Vec2{d[1], -d[0]}.normalized();
      if (!prof.contains((a + b) * 0.5 - n * 1e-6)) n = -n;  // inward check
      for (int i = 0; i < ne; ++i) colloc.push_back(a + d * ((i + 0.5) / ne)), normals.push_back(n);
    }
  }
  double offset = 0.45 * prof.bounding_radius();
  std::vector<Vec2> charges;
  for (std::size_t i = 0; i < colloc.size(); i += 2)
    charges.push_back(colloc[i] + normals[i] * offset);

  Eigen::MatrixXd A(colloc.size(), charges.size());
  Eigen::VectorXd rhs(colloc.size());
  for (std::size_t r = 0; r < colloc.size(); ++r) {
    rhs(r) = -free_green<2>(spec, colloc[r], pole);
    for (std::size_t c = 0; c < charges.size(); ++c)
      A(r, c) = free_green<2>(spec, colloc[r], charges[c]);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-13);
  cod.compute(A);
  Eigen::VectorXd w = cod.solve(rhs);

  CapGreenModel m;
  m.spec = spec;
  m.pole = pole;
  for (std::size_t c = 0; c < charges.size(); ++c) m.exterior.add(charges[c], w(c));
  ChargeEnsemble<2> all = m.exterior;
  all.add(pole, 1.0);
  m.total = PotentialField<2>(spec, all);
  double res = 0;
  for (std::size_t r = 1; r < colloc.size(); r += 2)
    res = std::max(res, std::abs(m.total.value(colloc[r])));
  m.fit.residual_holdout = res;
  m.fit.collocation = int(colloc.size());
  m.fit.charges = int(charges.size());
  if (res > fit_tol)
    throw SolverError("cap Green residual " + fmt_g(res) + " above tol", res);
  return m;
}

}  // namespace lf
