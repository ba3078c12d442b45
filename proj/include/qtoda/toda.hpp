#pragma once

// Geometric-grid functions, the centered second difference, the two-body
// relativistic open Toda difference operator, and eigenfunction residuals.

#include <vector>

#include "qtoda/qcalc.hpp"

namespace qtoda {

// Complex samples on the geometric grid {anchor * q^n : lo <= n <= hi}.
struct GridFunction {
  double anchor;
  int lo;
  int hi;
  std::vector<cplx> samples;

  GridFunction(double anchor_, int lo_, int hi_) : anchor(anchor_), lo(lo_), hi(hi_) {
    if (!(anchor > 0.0))
      throw std::domain_error("GridFunction: anchor must be positive");
    if (lo > hi) throw std::domain_error("GridFunction: lo must not exceed hi");
    samples.assign(static_cast<std::size_t>(hi - lo + 1), cplx{0.0, 0.0});
  }

  int size() const { return hi - lo + 1; }
  const cplx& at(int n) const {
    if (n < lo || n > hi)
      throw std::out_of_range("GridFunction: index outside window");
    return samples[static_cast<std::size_t>(n - lo)];
  }
  cplx& at(int n) {
    if (n < lo || n > hi)
      throw std::out_of_range("GridFunction: index outside window");
    return samples[static_cast<std::size_t>(n - lo)];
  }
  static double point(double anchor, double q, int n) {
    return anchor * std::pow(q, n);
  }
};

template <class F>
GridFunction sample_grid(const QContext& ctx, double anchor, int lo, int hi, F&& f) {
  GridFunction g(anchor, lo, hi);
  for (int n = lo; n <= hi; ++n) g.at(n) = f(GridFunction::point(anchor, ctx.q, n));
  return g;
}

// Centered second difference (f(qx) - 2f(x) + f(q^{-1}x))/(q-q^{-1})^2.
// The window shrinks by one at each end.
inline GridFunction delta_q(const QContext& ctx, const GridFunction& f) {
  if (f.hi - f.lo < 2)
    throw std::domain_error("delta_q: window too small");
  GridFunction g(f.anchor, f.lo + 1, f.hi - 1);
  double d = ctx.q - 1.0 / ctx.q;
  double d2 = d * d;
  for (int n = g.lo; n <= g.hi; ++n)
    g.at(n) = (f.at(n + 1) - 2.0 * f.at(n) + f.at(n - 1)) / d2;
  return g;
}

struct TodaOperator {
  QContext ctx;
  explicit TodaOperator(const QContext& ctx_) : ctx(ctx_) {}
};

// H f = -Delta_q f + mu^2 q^{-2 delta + 2} x^2 f(q^{1-delta} x).
inline GridFunction apply_hamiltonian(const TodaOperator& op, const GridFunction& f) {
  const QContext& ctx = op.ctx;
  if (f.hi - f.lo < 2)
    throw std::domain_error("apply_hamiltonian: window too small");
  GridFunction g(f.anchor, f.lo + 1, f.hi - 1);
  GridFunction lap = delta_q(ctx, f);
  double coef = ctx.mu * ctx.mu * std::pow(ctx.q, -2.0 * ctx.delta + 2.0);
  int shift = 1 - ctx.delta;  // f(q^{1-delta}x) lives at n + (1-delta)
  for (int n = g.lo; n <= g.hi; ++n) {
    double x = GridFunction::point(f.anchor, ctx.q, n);
    g.at(n) = -lap.at(n) + coef * x * x * f.at(n + shift);
  }
  return g;
}

// lambda = -([i nu/2]_q)^2; I-family eigenvalue of H.
inline cplx toda_eigenvalue(const QContext& ctx) {
  cplx b = qnumber(cplx{0.0, ctx.nu / 2.0}, ctx.q);
  return -b * b;
}

struct EigenResidual {
  double value;        // max |Hf - lambda f| / (|lambda| sup|f| + abs_eps)
  double raw_value;    // same normalization, residual via the 4-term difference form
  double cross_check;  // max pointwise |difference of the two forms| normalized
};

// The difference form F(q^{-1}x) - (q^{i nu}+q^{-i nu})F(x) + F(qx)
//   - mu^2 q^{-2 delta}(1-q^2)^2 x^2 F(q^{1-delta}x)
// equals -(q-q^{-1})^2 (H F - lambda F) identically when lambda is the
// family eigenvalue -([i nu/2]_q)^2; both are evaluated and compared
// pointwise, so cross_check is a pure rounding-level quantity there.
inline EigenResidual eigen_residual_report(const TodaOperator& op, const GridFunction& f,
                                           cplx eigenvalue, const Tolerances& tol = {}) {
  const QContext& ctx = op.ctx;
  if (f.hi - f.lo < 2)
    throw std::domain_error("eigen_residual: empty valid window");
  GridFunction hf = apply_hamiltonian(op, f);
  double d = ctx.q - 1.0 / ctx.q;
  double d2 = d * d;
  cplx lam2 = cpow(ctx.q, cplx{0.0, ctx.nu}) + cpow(ctx.q, cplx{0.0, -ctx.nu});
  double coef = ctx.mu * ctx.mu * std::pow(ctx.q, -2.0 * ctx.delta) *
                (1.0 - ctx.q2()) * (1.0 - ctx.q2());
  int shift = 1 - ctx.delta;
  // |f| is the sup over the window: the samples span many orders of
  // magnitude, and normalizing pointwise would only amplify the rounding
  // of the dominant stencil entries at the grid edges.
  double fsup = 0.0;
  for (int n = f.lo; n <= f.hi; ++n) fsup = std::max(fsup, std::abs(f.at(n)));
  double denom = std::abs(eigenvalue) * fsup + tol.abs_eps;
  EigenResidual out{0.0, 0.0, 0.0};
  for (int n = hf.lo; n <= hf.hi; ++n) {
    double x = GridFunction::point(f.anchor, ctx.q, n);
    cplx rh = hf.at(n) - eigenvalue * f.at(n);
    cplx rraw = -(f.at(n - 1) - lam2 * f.at(n) + f.at(n + 1) -
                  coef * x * x * f.at(n + shift)) /
                d2;
    out.value = std::max(out.value, std::abs(rh) / denom);
    out.raw_value = std::max(out.raw_value, std::abs(rraw) / denom);
    out.cross_check = std::max(out.cross_check, std::abs(rh - rraw) / denom);
  }
  return out;
}

inline double eigen_residual(const TodaOperator& op, const GridFunction& f,
                             cplx eigenvalue, const Tolerances& tol = {}) {
  return eigen_residual_report(op, f, eigenvalue, tol).value;
}

}  // namespace qtoda
