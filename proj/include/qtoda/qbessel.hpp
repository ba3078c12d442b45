#pragma once

// Three families of modified q^2-Bessel series, their oscillatory
// counterparts, the decaying Macdonald-type combinations, the matching
// constant, Wronskians with closed forms, and the interior coefficient sums
// used to verify them.

#include "qtoda/qcalc.hpp"

namespace qtoda {

// Family index j with the fixed correspondence j=1<->delta=2, j=2<->delta=0,
// j=3<->delta=1.
struct BesselKind {
  int j;
  explicit BesselKind(int j_) : j(j_) {
    if (j < 1 || j > 3) throw std::domain_error("BesselKind: j must be 1, 2 or 3");
  }
  int delta() const { return j == 1 ? 2 : (j == 2 ? 0 : 1); }
  static BesselKind for_delta(int d) {
    if (d == 2) return BesselKind(1);
    if (d == 0) return BesselKind(2);
    if (d == 1) return BesselKind(3);
    throw std::domain_error("BesselKind: delta must be 0, 1 or 2");
  }
};

struct BesselEval {
  BesselKind kind;
  cplx order;
  cplx argument;  // display argument 2 mu (1-q^2) q^{-delta/2} x
  SeriesValue result;
};

namespace detail {

inline void check_kind(const QContext& ctx, BesselKind kind) {
  if (kind.delta() != ctx.delta)
    throw std::invalid_argument("BesselKind does not match the context delta");
}

// Shared kernel in the physical argument z, general complex order lam:
//   prefactor q^{-d lam/2} / Gamma_{q^2}(lam+1)
//   sum_k s^k q^{(2-d)k(k+lam)-kd} (1-q^2)^{2k} (mu z)^{lam+2k}
//         / ((q^2;q^2)_k (q^{2lam+2};q^2)_k)
// s=+1 gives the monotone family, s=-1 the oscillatory one.  For d=2 the
// quadratic damping q^{(2-d)k^2} degenerates and the series only converges
// for mu(1-q^2)q^{-1}|z| < 1; evaluation is guarded at 0.95.
inline SeriesValue order_series(const QContext& ctx, cplx lam, cplx z,
                                double term_sign, const Tolerances& tol) {
  const double q = ctx.q;
  const int d = ctx.delta;
  const double Q = q * q;
  const cplx muz = ctx.mu * z;
  double ratio_cap = 0.0;
  if (d == 2) {
    ratio_cap = ctx.mu * (1.0 - Q) / q * std::abs(z);
    ratio_cap *= ratio_cap;
    if (!(ratio_cap < 0.9025))
      throw std::domain_error(
          "order_series: argument outside the d=2 convergence window (near the pole lattice)");
  }
  cplx pref = cpow(q, -0.5 * static_cast<double>(d) * lam) /
              qgamma(lam + cplx{1.0, 0.0}, Q, tol).value;
  const cplx q2lam = cpow(q, 2.0 * lam);
  const cplx qdlam = cpow(q, (2.0 - d) * lam);
  const cplx muz2 = muz * muz;
  const double f2 = (1.0 - Q) * (1.0 - Q);

  cplx t = cpow(muz, lam);
  cplx acc = t;
  int k = 0;
  int consec = 0;
  double last = std::abs(t);
  while (k < tol.max_terms) {
    if (last < tol.rel_eps * std::abs(acc) + tol.abs_eps) {
      if (++consec >= 3) break;
    } else {
      consec = 0;
    }
    double Qk1 = std::pow(Q, k + 1);
    cplx r = term_sign * cpow(q, (2.0 - d) * (2 * k + 1) - d) * qdlam * f2 * muz2 /
             ((1.0 - Qk1) * (1.0 - q2lam * Qk1));
    t *= r;
    acc += t;
    last = std::abs(t);
    ++k;
  }
  double geom = (d == 2) ? 1.0 / (1.0 - ratio_cap) : 1.0 / (1.0 - Q);
  return {pref * acc, k > 0 ? k : 1, std::abs(pref) * last * geom};
}

}  // namespace detail

// I-family at general complex order, physical argument x > 0.
inline SeriesValue modified_I_order(const QContext& ctx, cplx lam, double x,
                                    const Tolerances& tol = {}) {
  if (!(x > 0.0)) throw std::domain_error("modified_I_order: x must be positive");
  return detail::order_series(ctx, lam, cplx{x, 0.0}, +1.0, tol);
}

inline SeriesValue modified_I(const QContext& ctx, BesselKind kind, int sign, double x,
                              const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  if (sign != 1 && sign != -1)
    throw std::domain_error("modified_I: sign must be +1 or -1");
  return modified_I_order(ctx, cplx{0.0, sign * ctx.nu}, x, tol);
}

// Oscillatory family at complex argument (principal branch of z^lam).
inline SeriesValue bessel_J(const QContext& ctx, BesselKind kind, int sign, cplx z,
                            const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  if (sign != 1 && sign != -1)
    throw std::domain_error("bessel_J: sign must be +1 or -1");
  return detail::order_series(ctx, cplx{0.0, sign * ctx.nu}, z, -1.0, tol);
}

// Order-zero oscillatory series; entire in z for j=2,3.
inline SeriesValue bessel_J0(const QContext& ctx, BesselKind kind, cplx z,
                             const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  return detail::order_series(ctx, cplx{0.0, 0.0}, z, -1.0, tol);
}

inline BesselEval evaluate_modified_I(const QContext& ctx, BesselKind kind, int sign,
                                      double x, const Tolerances& tol = {}) {
  SeriesValue r = modified_I(ctx, kind, sign, x, tol);
  double scale = 1.0;
  for (int i = 0; i < ctx.delta; ++i) scale /= ctx.q;
  cplx disp = 2.0 * ctx.mu * (1.0 - ctx.q2()) * std::sqrt(scale) * x;
  return {kind, cplx{0.0, sign * ctx.nu}, disp, r};
}

// Matching constant at general order: principal square root of the ratio of
// the entire-family (delta=0) evaluations at display argument 2.  Depends
// only on (q, order); continuity at order 0 fixes the branch.
inline cplx matching_constant_A_order(const QContext& ctx, cplx lam,
                                      const Tolerances& tol = {}) {
  QContext c(ctx.q, 0, 1.0, ctx.nu);
  double x = 1.0 / (1.0 - c.q2());
  cplx up = detail::order_series(c, lam, cplx{x, 0.0}, +1.0, tol).value;
  cplx dn = detail::order_series(c, -lam, cplx{x, 0.0}, +1.0, tol).value;
  if (!(std::abs(dn) > 0.0))
    throw std::domain_error("matching_constant_A: vanishing denominator");
  return std::sqrt(up / dn);
}

inline cplx matching_constant_A(const QContext& ctx, const Tolerances& tol = {}) {
  return matching_constant_A_order(ctx, cplx{0.0, ctx.nu}, tol);
}

// Decaying combination
//   K = 1/2 q^{nu^2+i nu} Gamma_{q^2}(i nu) Gamma_{q^2}(1-i nu)
//       [A^{|1-delta|} I_{-i nu} - A_{-}^{|1-delta|} I_{+i nu}].
inline SeriesValue macdonald_K(const QContext& ctx, BesselKind kind, double x,
                               const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  const double q = ctx.q;
  const double Q = q * q;
  const cplx inu{0.0, ctx.nu};
  if (std::abs(1.0 - cpow(q, 2.0 * inu)) < 1e-12)
    throw std::domain_error("macdonald_K: degenerate order (1 - q^{2 i nu} vanishes)");
  const int e = std::abs(1 - ctx.delta);
  cplx wp{1.0, 0.0}, wm{1.0, 0.0};
  if (e != 0) {
    wp = matching_constant_A_order(ctx, inu, tol);
    wm = matching_constant_A_order(ctx, -inu, tol);
  }
  SeriesValue Ip = modified_I(ctx, kind, +1, x, tol);
  SeriesValue Im = modified_I(ctx, kind, -1, x, tol);
  cplx pref = 0.5 * cpow(q, cplx{ctx.nu * ctx.nu, ctx.nu}) *
              qgamma(inu, Q, tol).value * qgamma(cplx{1.0, 0.0} - inu, Q, tol).value;
  cplx v = pref * (wp * Im.value - wm * Ip.value);
  double tail = std::abs(pref) *
                (std::abs(wp) * Im.tail_estimate + std::abs(wm) * Ip.tail_estimate);
  return {v, Ip.terms_used + Im.terms_used, tail};
}

// W(x) = I_{+}(x) I_{-}(qx) - I_{-}(x) I_{+}(qx); first factor at display
// q^{-delta/2}x, second at q^{1-delta/2}x.
inline cplx wronskian(const QContext& ctx, BesselKind kind, double x,
                      const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  cplx a = modified_I(ctx, kind, +1, x, tol).value;
  cplx b = modified_I(ctx, kind, -1, ctx.q * x, tol).value;
  cplx c = modified_I(ctx, kind, -1, x, tol).value;
  cplx d = modified_I(ctx, kind, +1, ctx.q * x, tol).value;
  return a * b - c * d;
}

// Closed forms: the x-independent constant
//   W0 = q^{-i nu}(1-q^{2 i nu}) / (Gamma_{q^2}(i nu+1) Gamma_{q^2}(-i nu+1))
// times (mu^2(1-q^2)^2 q^2 x^2; q^2)_inf for delta=0, 1 for delta=1, and the
// reciprocal product at q^{-2} for delta=2 (pole when the argument reaches 1).
inline cplx wronskian_closed_form(const QContext& ctx, BesselKind kind, double x,
                                 const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  const double q = ctx.q;
  const double Q = q * q;
  const cplx inu{0.0, ctx.nu};
  cplx w0 = cpow(q, -inu) * (cplx{1.0, 0.0} - cpow(q, 2.0 * inu)) /
            (qgamma(inu + cplx{1.0, 0.0}, Q, tol).value *
             qgamma(cplx{1.0, 0.0} - inu, Q, tol).value);
  double base = ctx.mu * (1.0 - Q) * x;
  base *= base;
  if (ctx.delta == 0) return w0 * qpochhammer_inf(cplx{base * Q, 0.0}, Q, tol).value;
  if (ctx.delta == 1) return w0;
  double arg = base / Q;
  cplx den = qpochhammer_inf(cplx{arg, 0.0}, Q, tol).value;
  if (!(std::abs(den) > 0.0))
    throw std::domain_error("wronskian_closed_form: delta=2 pole");
  return w0 / den;
}

// Interior coefficient sum of the Wronskian series expansion:
//   S_k = sum_n [k;n]_{q^2} q^{-2(2-delta)n(k-n-i nu)}
//         (q^{-i nu+2k-2n} - q^{i nu+2n})
//         / ((q^{2 i nu+2};q^2)_n (q^{-2 i nu+2};q^2)_{k-n}).
// tail_estimate reports the roundoff scale eps * sum |terms|: for delta=1
// the terms reach q^{-2n(k-n)} while the sum telescopes to zero, so equality
// checks must be read against that scale.
inline SeriesValue interior_sum_S(const QContext& ctx, int k, const Tolerances& tol = {}) {
  if (k < 0) throw std::domain_error("interior_sum_S: k must be nonnegative");
  const double q = ctx.q;
  const double Q = q * q;
  const cplx inu{0.0, ctx.nu};
  const cplx qp2 = cpow(q, 2.0 * inu + 2.0);
  const cplx qm2 = cpow(q, -2.0 * inu + 2.0);
  cplx acc{0.0, 0.0};
  double mag = 0.0;
  for (int n = 0; n <= k; ++n) {
    cplx binom = qpochhammer(cplx{Q, 0.0}, Q, k, tol).value /
                 (qpochhammer(cplx{Q, 0.0}, Q, n, tol).value *
                  qpochhammer(cplx{Q, 0.0}, Q, k - n, tol).value);
    cplx expo = -2.0 * (2.0 - ctx.delta) * static_cast<double>(n) *
                (cplx{static_cast<double>(k - n), 0.0} - inu);
    cplx num = cpow(q, -inu + 2.0 * (k - n)) - cpow(q, inu + 2.0 * n);
    cplx den = qpochhammer(qp2, Q, n, tol).value * qpochhammer(qm2, Q, k - n, tol).value;
    cplx t = binom * cpow(q, expo) * num / den;
    acc += t;
    mag += std::abs(t);
  }
  return {acc, k + 1, std::numeric_limits<double>::epsilon() * mag};
}

// Verified case table: delta=0: (-1)^k q^{-k(k-2 i nu-1)-i nu}(1-q^{2 i nu});
// delta=1: q^{-i nu}(1-q^{2 i nu}) only at k=0; delta=2: q^{-i nu}(1-q^{2 i nu})
// for every k.
inline cplx interior_sum_S_closed(const QContext& ctx, int k) {
  if (k < 0) throw std::domain_error("interior_sum_S_closed: k must be nonnegative");
  const cplx inu{0.0, ctx.nu};
  cplx base = cpow(ctx.q, -inu) * (cplx{1.0, 0.0} - cpow(ctx.q, 2.0 * inu));
  if (ctx.delta == 0) {
    double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    cplx expo = -static_cast<double>(k) *
                (cplx{static_cast<double>(k - 1), 0.0} - 2.0 * inu);
    return sgn * cpow(ctx.q, expo) * base;
  }
  if (ctx.delta == 1) return k == 0 ? base : cplx{0.0, 0.0};
  return base;
}

}  // namespace qtoda
