#pragma once

// Closed-form free-space fundamental solutions of (Laplacian - k^2) in
// dimensions 2 and 3, with analytic first and second derivatives. These are
// the building blocks for every charge superposition in the library.
//
//   n=3, k=0 :  1/(4 pi r)
//   n=3, k>0 :  exp(-k r)/(4 pi r)
//   n=2, k=0 :  -log(r)/(2 pi)
//   n=2, k>0 :  K0(k r)/(2 pi)
//
// Dimension 2 is an extension kept for cheap tests and cross-section
// solves; the pipeline proper runs in dimension 3.

#include <cmath>
#include <stdexcept>

#include "levelforge/core.hpp"

namespace lf {

struct KernelSpec {
  int dimension = 3;
  double yukawa_k = 0.0;  // k = 0 selects the Laplace kernel

  void validate() const {
    if (dimension != 2 && dimension != 3)
      throw std::invalid_argument("KernelSpec: dimension must be 2 or 3");
    if (!(yukawa_k >= 0))
      throw std::invalid_argument("KernelSpec: yukawa_k must be >= 0");
  }
};

namespace detail {

// Radial profile g(r) with first and second derivatives.
struct Radial {
  double g, dg, d2g;
};

inline Radial radial3(double k, double r) {
  const double inv4pi = 1.0 / (4.0 * kPi);
  double g = std::exp(-k * r) * inv4pi / r;
  double a = k + 1.0 / r;
  return {g, -a * g, (k * k + 2 * k / r + 2 / (r * r)) * g};
}

inline Radial radial2(double k, double r) {
  const double inv2pi = 1.0 / (2.0 * kPi);
  if (k == 0) return {-std::log(r) * inv2pi, -inv2pi / r, inv2pi / (r * r)};
  double z = k * r;
  double k0 = std::cyl_bessel_k(0.0, z);
  double k1 = std::cyl_bessel_k(1.0, z);
  // K0' = -K1,  K0'' = K0 + K1/z
  return {k0 * inv2pi, -k * k1 * inv2pi, k * k * (k0 + k1 / z) * inv2pi};
}

template <int N>
inline Radial radial(double k, double r) {
  if constexpr (N == 3)
    return radial3(k, r);
  else
    return radial2(k, r);
}

inline void check_separation(double r) {
  if (!(r > 1e-14)) throw std::domain_error("free_green: coincident points");
}

}  // namespace detail

template <int N>
double free_green(const KernelSpec& spec, const Vec<N>& x, const Vec<N>& y) {
  double r = (x - y).norm();
  detail::check_separation(r);
  return detail::radial<N>(spec.yukawa_k, r).g;
}

template <int N>
Vec<N> free_green_grad(const KernelSpec& spec, const Vec<N>& x, const Vec<N>& y) {
  Vec<N> d = x - y;
  double r = d.norm();
  detail::check_separation(r);
  auto rad = detail::radial<N>(spec.yukawa_k, r);
  return d * (rad.dg / r);
}

template <int N>
Mat<N> free_green_hess(const KernelSpec& spec, const Vec<N>& x, const Vec<N>& y) {
  Vec<N> d = x - y;
  double r = d.norm();
  detail::check_separation(r);
  auto rad = detail::radial<N>(spec.yukawa_k, r);
  Vec<N> u = d / r;
  Mat<N> h = outer(u, u) * (rad.d2g - rad.dg / r);
  Mat<N> id = Mat<N>::identity();
  h += id * (rad.dg / r);
  return h;
}

// Value, gradient and Hessian contribution of one unit charge, sharing the
// radial evaluation. This is the hot path of ensemble sums.
template <int N>
struct KernelEval {
  double value;
  Vec<N> grad;
  Mat<N> hess;
};

template <int N>
inline KernelEval<N> free_green_all(const KernelSpec& spec, const Vec<N>& x,
                                    const Vec<N>& y) {
  Vec<N> d = x - y;
  double r = d.norm();
  detail::check_separation(r);
  auto rad = detail::radial<N>(spec.yukawa_k, r);
  KernelEval<N> e;
  e.value = rad.g;
  e.grad = d * (rad.dg / r);
  Vec<N> u = d / r;
  e.hess = outer(u, u) * (rad.d2g - rad.dg / r);
  e.hess += Mat<N>::identity() * (rad.dg / r);
  return e;
}

}  // namespace lf
