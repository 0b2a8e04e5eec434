#pragma once

// Small fixed-dimension vector/matrix types, a seedable PRNG and a
// deterministic parallel loop. Everything downstream works in double
// precision with n in {2, 3}.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lf {

template <int N>
struct Vec {
  static_assert(N == 2 || N == 3, "only dimensions 2 and 3 are supported");
  std::array<double, N> c{};

  Vec() = default;
  Vec(double x, double y) : c{x, y} { static_assert(N == 2 || N == 3); }
  Vec(double x, double y, double z) {
    static_assert(N == 3);
    c = {x, y, z};
  }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec operator+(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Vec operator*(double s) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] * s;
    return r;
  }
  Vec operator/(double s) const { return *this * (1.0 / s); }
  Vec operator-() const { return *this * -1.0; }
  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < N; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < N; ++i) c[i] *= s;
    return *this;
  }

  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < N; ++i) s += c[i] * o.c[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec normalized() const {
    double n = norm();
    if (n == 0) throw std::domain_error("normalizing zero vector");
    return *this / n;
  }
};

template <int N>
inline Vec<N> operator*(double s, const Vec<N>& v) {
  return v * s;
}

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

template <int N>
struct Mat {
  std::array<double, N * N> a{};

  double& operator()(int i, int j) { return a[i * N + j]; }
  double operator()(int i, int j) const { return a[i * N + j]; }

  static Mat identity() {
    Mat m;
    for (int i = 0; i < N; ++i) m(i, i) = 1;
    return m;
  }
  Mat operator+(const Mat& o) const {
    Mat r;
    for (int i = 0; i < N * N; ++i) r.a[i] = a[i] + o.a[i];
    return r;
  }
  Mat operator-(const Mat& o) const {
    Mat r;
    for (int i = 0; i < N * N; ++i) r.a[i] = a[i] - o.a[i];
    return r;
  }
  Mat operator*(double s) const {
    Mat r;
    for (int i = 0; i < N * N; ++i) r.a[i] = a[i] * s;
    return r;
  }
  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < N * N; ++i) a[i] += o.a[i];
    return *this;
  }
  Vec<N> operator*(const Vec<N>& v) const {
    Vec<N> r;
    for (int i = 0; i < N; ++i) {
      double s = 0;
      for (int j = 0; j < N; ++j) s += (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }
  double trace() const {
    double s = 0;
    for (int i = 0; i < N; ++i) s += (*this)(i, i);
    return s;
  }
  double frobenius() const {
    double s = 0;
    for (int i = 0; i < N * N; ++i) s += a[i] * a[i];
    return std::sqrt(s);
  }
};

template <int N>
inline Mat<N> outer(const Vec<N>& u, const Vec<N>& v) {
  Mat<N> m;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) m(i, j) = u[i] * v[j];
  return m;
}

// Axis-aligned box, used as truncation/extraction region.
template <int N>
struct Box {
  Vec<N> lo, hi;
  bool contains(const Vec<N>& p, double margin = 0) const {
    for (int i = 0; i < N; ++i)
      if (p[i] < lo[i] - margin || p[i] > hi[i] + margin) return false;
    return true;
  }
  Vec<N> extent() const { return hi - lo; }
  static Box cube(double half) {
    Box b;
    for (int i = 0; i < N; ++i) {
      b.lo[i] = -half;
      b.hi[i] = half;
    }
    return b;
  }
};
using Box2 = Box<2>;
using Box3 = Box<3>;

// All randomness in a run flows from one seeded 64-bit generator so that
// probe sets are reproducible byte for byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // in [0,1)
    return (eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(eng_() % std::uint64_t(n)); }
  double normal() {
    // Box-Muller, deterministic across standard libraries.
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  template <int N>
  Vec<N> in_box(const Box<N>& b) {
    Vec<N> p;
    for (int i = 0; i < N; ++i) p[i] = uniform(b.lo[i], b.hi[i]);
    return p;
  }
  Vec3 unit3() {
    double z = uniform(-1, 1), phi = uniform(0, 6.283185307179586);
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// Global worker count for parallel loops (CLI --threads).
inline int& thread_count() {
  static int n = 1;
  return n;
}

// Deterministic parallel for: chunk boundaries are fixed, writers index
// disjoint slots, so results do not depend on the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = thread_count();
  if (workers <= 1 || n < 512) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = 256;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t start = next.fetch_add(chunk);
      if (start >= n) return;
      std::size_t end = std::min(n, start + chunk);
      for (std::size_t i = start; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < workers - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

// Fixed-format float printing shared by verdicts, ledgers and reports so
// repeated runs emit identical bytes.
inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double sqr(double x) { return x * x; }

constexpr double kPi = 3.141592653589793238462643383279502884;

// Gauss-Legendre nodes/weights on [-1, 1] (Newton on the Legendre recurrence).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p0 = 1, p1 = xi, dp = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1;
      p1 = xi;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (xi * p1 - p0) / (xi * xi - 1);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = xi;
    w[i] = 2.0 / ((1 - xi * xi) * dp * dp);
  }
}

}  // namespace lf
