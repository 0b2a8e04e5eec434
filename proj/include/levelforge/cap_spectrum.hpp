#pragma once

// Lowest Dirichlet eigenvalue of tentacle caps. The essential spectrum of a
// tentacled domain reduces to its caps, so min_i lambda_cap(i) + k^2 yields
// the squared decay rate used by the Green's-function checks.
//
// Discretization: Shortley-Weller finite differences (boundary-fitted arm
// lengths, O(h^2)) with inverse power iteration, Richardson-extrapolated
// over grids h and h/2.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "levelforge/geometry.hpp"

namespace lf {

struct SpectralBound {
  double lambda_cap = 0;           // lowest Dirichlet eigenvalue of one cap
  double lambda_domain_lower = 0;  // min over caps
  double decay_rate = 0;           // sqrt(lambda_domain_lower + k^2)
};

namespace detail {

// distance (fraction of h) from an inside node to the profile boundary
// along a grid direction, by bisection on membership
inline double boundary_arm(const CapProfile& prof, const Vec2& p, const Vec2& dir,
                           double h) {
  double a = 0, b = 1;
  for (int i = 0; i < 60; ++i) {
    double m = 0.5 * (a + b);
    (prof.contains(p + dir * (m * h)) ? a : b) = m;
  }
  return std::max(0.5 * (a + b), 1e-6);
}

inline double smallest_eigenvalue(const Eigen::SparseMatrix<double>& A) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("cap eigensolver: factorization failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
  x.normalize();
  double lambda = 0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    y.normalize();
    double next = y.dot(A * y);
    if (it > 3 && std::abs(next - lambda) < 1e-12 * std::abs(next)) {
      return next;
    }
    lambda = next;
    x = y;
  }
  return lambda;
}

inline double disk_grid_eigenvalue(const CapProfile& prof, double h) {
  double R = prof.bounding_radius();
  int n = int(std::ceil(2 * R / h)) + 3;
  double x0 = -0.5 * n * h;
  auto node = [&](int i, int j) { return Vec2{x0 + i * h, x0 + j * h}; };
  std::vector<int> idx(std::size_t(n) * n, -1);
  int count = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (prof.contains(node(i, j))) idx[std::size_t(j) * n + i] = count++;
  if (count < 9) throw std::invalid_argument("cap eigensolver: grid too coarse");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(count * 5);
  const Vec2 dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int row = idx[std::size_t(j) * n + i];
      if (row < 0) continue;
      Vec2 p = node(i, j);
      double arm[4];
      int nb[4];
      for (int d = 0; d < 4; ++d) {
        int ii = i + di[d], jj = j + dj[d];
        nb[d] = (ii >= 0 && jj >= 0 && ii < n && jj < n)
                    ? idx[std::size_t(jj) * n + ii]
                    : -1;
        arm[d] = nb[d] >= 0 ? 1.0 : boundary_arm(prof, p, dirs[d], h);
      }
      double diag = 0;
      for (int axis = 0; axis < 2; ++axis) {
        double hp = arm[2 * axis] * h, hm = arm[2 * axis + 1] * h;
        diag += 2.0 / (hp * hm);
        if (nb[2 * axis] >= 0)
          trip.emplace_back(row, nb[2 * axis], -2.0 / (hp * (hp + hm)));
        if (nb[2 * axis + 1] >= 0)
          trip.emplace_back(row, nb[2 * axis + 1], -2.0 / (hm * (hp + hm)));
      }
      trip.emplace_back(row, row, diag);
    }
  Eigen::SparseMatrix<double> A(count, count);
  A.setFromTriplets(trip.begin(), trip.end());
  return smallest_eigenvalue(A);
}

inline double interval_grid_eigenvalue(double length, double h) {
  int m = int(std::round(length / h)) - 1;
  if (m < 3) throw std::invalid_argument("interval eigensolver: grid too coarse");
  double hh = length / (m + 1);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < m; ++i) {
    trip.emplace_back(i, i, 2.0 / (hh * hh));
    if (i > 0) trip.emplace_back(i, i - 1, -1.0 / (hh * hh));
    if (i + 1 < m) trip.emplace_back(i, i + 1, -1.0 / (hh * hh));
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  return smallest_eigenvalue(A);
}

}  // namespace detail

// Richardson extrapolation over grids h and h/2; the two-grid disagreement
// above 10% signals non-convergence.
inline double cap_dirichlet_eigenvalue(const CapProfile& prof, double grid_h) {
  if (2 * prof.bounding_radius() / grid_h < 19)
    throw std::invalid_argument("cap_eigenvalue: need >= 20 points across the cap");
  double l1 = detail::disk_grid_eigenvalue(prof, grid_h);
  double l2 = detail::disk_grid_eigenvalue(prof, grid_h * 0.5);
  if (std::abs(l1 - l2) > 0.1 * std::abs(l2))
    throw std::runtime_error("cap_eigenvalue: grids disagree by more than 10%");
  return (4 * l2 - l1) / 3;
}

inline double interval_dirichlet_eigenvalue(double length, double grid_h) {
  double l1 = detail::interval_grid_eigenvalue(length, grid_h);
  double l2 = detail::interval_grid_eigenvalue(length, grid_h * 0.5);
  if (std::abs(l1 - l2) > 0.1 * std::abs(l2))
    throw std::runtime_error("interval eigenvalue: grids disagree by more than 10%");
  return (4 * l2 - l1) / 3;
}

inline SpectralBound cap_eigenvalue(const Cap& cap, double grid_h, double k) {
  SpectralBound b;
  b.lambda_cap = cap_dirichlet_eigenvalue(cap.profile, grid_h);
  b.lambda_domain_lower = b.lambda_cap;
  b.decay_rate = std::sqrt(b.lambda_cap + k * k);
  return b;
}

// min over the caps of a domain; slab domains use the 1-D thickness mode.
inline SpectralBound domain_spectral_bound(const TentacledDomain& dom,
                                           double grid_points_across, double k) {
  SpectralBound b;
  b.lambda_domain_lower = 1e300;
  for (const auto& t : dom.tentacles) {
    double h = 2 * t.cap.profile.bounding_radius() / grid_points_across;
    double l = cap_dirichlet_eigenvalue(t.cap.profile, h);
    b.lambda_domain_lower = std::min(b.lambda_domain_lower, l);
    b.lambda_cap = l;
  }
  if (dom.tentacles.empty()) {
    for (const auto& prim : dom.core)
      if (prim.type == Primitive::Type::Slab) {
        double d = prim.hi - prim.lo;
        double l = interval_dirichlet_eigenvalue(d, d / grid_points_across);
        b.lambda_domain_lower = std::min(b.lambda_domain_lower, l);
        b.lambda_cap = l;
      }
    if (b.lambda_domain_lower == 1e300)
      throw std::invalid_argument("domain_spectral_bound: no tentacles or slabs");
  }
  b.decay_rate = std::sqrt(b.lambda_domain_lower + k * k);
  return b;
}

}  // namespace lf
