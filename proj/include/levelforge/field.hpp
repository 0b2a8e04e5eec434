#pragma once

// Scalar fields with value/gradient/Hessian evaluation: the common currency
// of every pipeline stage. Charge superpositions are the workhorse concrete
// type; small adaptors cover shifted/summed/analytic fields.

#include <functional>
#include <memory>
#include <vector>

#include "levelforge/core.hpp"
#include "levelforge/kernels.hpp"

namespace lf {

template <int N>
class Field {
 public:
  virtual ~Field() = default;
  virtual double value(const Vec<N>& x) const = 0;
  virtual Vec<N> gradient(const Vec<N>& x) const = 0;
  virtual Mat<N> hessian(const Vec<N>& x) const = 0;
};

enum class ChargeKind { Point, LineQuadrature };

template <int N>
struct ChargeEnsemble {
  struct Entry {
    Vec<N> location;
    double weight;
  };
  std::vector<Entry> entries;
  ChargeKind kind = ChargeKind::Point;

  void add(const Vec<N>& p, double w) { entries.push_back({p, w}); }
  void append(const ChargeEnsemble& o) {
    entries.insert(entries.end(), o.entries.begin(), o.entries.end());
  }
  std::size_t size() const { return entries.size(); }
};

// Superposition of free-space kernels with fixed weights. Solves
// (Laplacian - k^2) u = 0 away from the charge locations by construction.
template <int N>
class PotentialField : public Field<N> {
 public:
  PotentialField() = default;
  PotentialField(KernelSpec spec, ChargeEnsemble<N> charges)
      : spec_(spec), charges_(std::move(charges)) {}

  double value(const Vec<N>& x) const override {
    double s = 0;
    for (const auto& e : charges_.entries) s += e.weight * free_green<N>(spec_, x, e.location);
    return s;
  }
  Vec<N> gradient(const Vec<N>& x) const override {
    Vec<N> g;
    for (const auto& e : charges_.entries) g += free_green_grad<N>(spec_, x, e.location) * e.weight;
    return g;
  }
  Mat<N> hessian(const Vec<N>& x) const override {
    Mat<N> h;
    for (const auto& e : charges_.entries) h += free_green_hess<N>(spec_, x, e.location) * e.weight;
    return h;
  }
  KernelEval<N> all(const Vec<N>& x) const {
    KernelEval<N> acc{};
    for (const auto& e : charges_.entries) {
      KernelEval<N> k = free_green_all<N>(spec_, x, e.location);
      acc.value += e.weight * k.value;
      acc.grad += k.grad * e.weight;
      acc.hess += k.hess * e.weight;
    }
    return acc;
  }

  const ChargeEnsemble<N>& charges() const { return charges_; }
  ChargeEnsemble<N>& charges() { return charges_; }
  const KernelSpec& spec() const { return spec_; }

 private:
  KernelSpec spec_;
  ChargeEnsemble<N> charges_;
};

template <int N>
class ShiftedField : public Field<N> {
 public:
  ShiftedField(const Field<N>& base, double shift) : base_(&base), shift_(shift) {}
  double value(const Vec<N>& x) const override { return base_->value(x) - shift_; }
  Vec<N> gradient(const Vec<N>& x) const override { return base_->gradient(x); }
  Mat<N> hessian(const Vec<N>& x) const override { return base_->hessian(x); }

 private:
  const Field<N>* base_;
  double shift_;
};

template <int N>
class SumField : public Field<N> {
 public:
  void add(const Field<N>& f, double w = 1.0) { terms_.push_back({&f, w}); }
  double value(const Vec<N>& x) const override {
    double s = 0;
    for (auto& t : terms_) s += t.second * t.first->value(x);
    return s;
  }
  Vec<N> gradient(const Vec<N>& x) const override {
    Vec<N> g;
    for (auto& t : terms_) g += t.first->gradient(x) * t.second;
    return g;
  }
  Mat<N> hessian(const Vec<N>& x) const override {
    Mat<N> h;
    for (auto& t : terms_) h += t.first->hessian(x) * t.second;
    return h;
  }

 private:
  std::vector<std::pair<const Field<N>*, double>> terms_;
};

// Field from closed-form callables; used in tests and fixtures.
template <int N>
class AnalyticField : public Field<N> {
 public:
  using ValueFn = std::function<double(const Vec<N>&)>;
  using GradFn = std::function<Vec<N>(const Vec<N>&)>;
  using HessFn = std::function<Mat<N>(const Vec<N>&)>;
  AnalyticField(ValueFn v, GradFn g, HessFn h)
      : v_(std::move(v)), g_(std::move(g)), h_(std::move(h)) {}
  double value(const Vec<N>& x) const override { return v_(x); }
  Vec<N> gradient(const Vec<N>& x) const override { return g_(x); }
  Mat<N> hessian(const Vec<N>& x) const override { return h_ ? h_(x) : Mat<N>{}; }

 private:
  ValueFn v_;
  GradFn g_;
  HessFn h_;
};

// Affine field a.x + b with zero Hessian.
template <int N>
class AffineField : public Field<N> {
 public:
  AffineField(const Vec<N>& a, double b) : a_(a), b_(b) {}
  double value(const Vec<N>& x) const override { return a_.dot(x) + b_; }
  Vec<N> gradient(const Vec<N>&) const override { return a_; }
  Mat<N> hessian(const Vec<N>&) const override { return {}; }

 private:
  Vec<N> a_;
  double b_;
};

// Centered finite-difference residual of (Laplacian - k^2) applied to a
// field: 5-point stencil in 2-D, 7-point in 3-D. O(h^2); used by the
// verification stages as an implementation-independent probe.
template <int N>
inline double fd_pde_residual(const Field<N>& f, const KernelSpec& spec,
                              const Vec<N>& x, double h) {
  double lap = 0;
  double c = f.value(x);
  for (int i = 0; i < N; ++i) {
    Vec<N> e;
    e[i] = h;
    lap += (f.value(x + e) - 2 * c + f.value(x - e)) / (h * h);
  }
  return lap - spec.yukawa_k * spec.yukawa_k * c;
}

// C^1 mismatch max(|df|, |dgrad|_2) between two fields at a point.
template <int N>
inline double c1_mismatch(const Field<N>& f, const Field<N>& g, const Vec<N>& x) {
  double dv = std::abs(f.value(x) - g.value(x));
  double dg = (f.gradient(x) - g.gradient(x)).norm();
  return std::max(dv, dg);
}

}  // namespace lf
