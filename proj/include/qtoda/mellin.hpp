#pragma once

// Contour-integral side of the spectral problem: the power-times-Gamma
// solution of the two-step functional equation, its truncated vertical-line
// integral reconstructing the decaying combination, the forward transform
// used to extract the normalization constant, and the order-lowering ladder
// with its boundary identity.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qtoda/qbessel.hpp"
#include "qtoda/qcalc.hpp"

namespace qtoda {

struct BarnesContour {
  double sigma;  // abscissa; must clear both Gamma pole lattices
  double T;      // half-height of the truncated vertical segment
  double h;      // trapezoid step, h <= T/50
};

// Abscissa |nu|+1 clears both pole lattices with unit margin.
inline BarnesContour default_contour(const QContext& ctx, double T = 20.0) {
  return {std::abs(ctx.nu) + 1.0, T, T / 2000.0};
}

namespace detail {

inline void check_contour(const QContext& ctx, const BarnesContour& c) {
  if (!(c.sigma > std::abs(ctx.nu)))
    throw std::domain_error("barnes contour: abscissa must exceed |nu|");
  if (!(c.T > 0.0) || !(c.h > 0.0) || c.h > c.T / 50.0)
    throw std::domain_error("barnes contour: need 0 < h <= T/50");
}

// Gamma_{q^2} pole lattice: w = -j + i pi k / ln q, integer j >= 0, integer k.
inline bool near_gamma_pole(cplx w, double q) {
  double rj = std::round(w.real());
  if (rj > 0.5 || std::abs(w.real() - rj) > 1e-9) return false;
  double g = pi / (-std::log(q));
  double rk = std::round(w.imag() / g);
  return std::abs(w.imag() - rk * g) < 1e-9;
}

}  // namespace detail

// g(s) = q^{-delta s^2/4 + (2+delta)s/2} G((s+i nu)/2) G((s-i nu)/2) with
// G = Gamma_{q^2}; the power-times-Gamma solution of
//   q^{-s}(1-q^{s+i nu})(1-q^{s-i nu})/(1-q^2)^2 g(s) = q^{(delta-1)s-2} g(s+2).
inline cplx g_of_s(cplx s, const QContext& ctx, const Tolerances& tol = {}) {
  const double Q = ctx.q2();
  const cplx inu{0.0, ctx.nu};
  const cplx wp = 0.5 * (s + inu);
  const cplx wm = 0.5 * (s - inu);
  if (detail::near_gamma_pole(wp, ctx.q) || detail::near_gamma_pole(wm, ctx.q))
    throw std::domain_error("g_of_s: argument too close to a Gamma pole");
  const double d = ctx.delta;
  cplx expo = -0.25 * d * s * s + 0.5 * (2.0 + d) * s;
  return cpow(ctx.q, expo) * qgamma(wp, Q, tol).value * qgamma(wm, Q, tol).value;
}

inline double g_recurrence_residual(cplx s, const QContext& ctx,
                                    const Tolerances& tol = {}) {
  const cplx inu{0.0, ctx.nu};
  const double om = 1.0 - ctx.q2();
  cplx lhs = cpow(ctx.q, -s) * (1.0 - cpow(ctx.q, s + inu)) *
             (1.0 - cpow(ctx.q, s - inu)) / (om * om) * g_of_s(s, ctx, tol);
  cplx rhs = cpow(ctx.q, (ctx.delta - 1.0) * s - 2.0) * g_of_s(s + 2.0, ctx, tol);
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

namespace detail {

// Trapezoid over the vertical segment, Kahan-compensated so the node order
// cannot perturb the sum beyond fp tolerance.
inline cplx barnes_line_integral(const QContext& ctx, double x, const BarnesContour& c,
                                 const Tolerances& tol, int* nodes_out) {
  const long n = std::lround(std::ceil(2.0 * c.T / c.h));
  const double h = 2.0 * c.T / static_cast<double>(n);
  cplx sum{0.0, 0.0}, comp{0.0, 0.0};
  auto add = [&](cplx v) {
    cplx y = v - comp;
    cplx t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  auto f = [&](double t) {
    cplx s{c.sigma, t};
    return g_of_s(s, ctx, tol) * cpow(x, -s);
  };
  add(0.5 * f(-c.T));
  for (long j = 1; j < n; ++j) add(f(-c.T + h * static_cast<double>(j)));
  add(0.5 * f(c.T));
  if (nodes_out) *nodes_out = static_cast<int>(n) + 1;
  return h * sum;
}

// Tail of the truncated line: |Gamma_{q^2}(w)| <= Gamma_{q^2}(Re w) for
// Re w > 0 (termwise modulus), so the integrand envelope is the Gaussian
// q^{delta t^2/4} for delta > 0 and flat for delta = 0 (no finite bound).
inline double barnes_tail_bound(const QContext& ctx, double x, const BarnesContour& c,
                                const Tolerances& tol) {
  if (ctx.delta == 0) return std::numeric_limits<double>::infinity();
  const double d = ctx.delta;
  double G = std::abs(qgamma(cplx{0.5 * c.sigma, 0.0}, ctx.q2(), tol).value);
  double amp = G * G *
               std::pow(ctx.q, -0.25 * d * c.sigma * c.sigma + 0.5 * (2.0 + d) * c.sigma) *
               std::pow(x, -c.sigma);
  double beta = 0.25 * d * (-std::log(ctx.q));
  return 2.0 * amp * std::exp(-beta * c.T * c.T) / (2.0 * beta * c.T);
}

}  // namespace detail

// Truncated-line reconstruction of the decaying combination:
//   -(ln q mu^{-i nu-2} / (4 pi (1-q^2))) A^{|1-delta|}
//     q^{(4-delta)nu^2/4 - delta/2} * q^{1/2} * int_{-T}^{T} g(sigma+it)x^{-s}dt.
// The q^{1/2} is the measured normalization of the dt-parameterized pair.
inline SeriesValue barnes_K(const QContext& ctx, BesselKind kind, double x,
                            const BarnesContour& contour, const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  detail::check_contour(ctx, contour);
  if (!(x > 0.0)) throw std::domain_error("barnes_K: x must be positive");
  int nodes = 0;
  cplx V = detail::barnes_line_integral(ctx, x, contour, tol, &nodes);
  const int e = std::abs(1 - ctx.delta);
  cplx Aw{1.0, 0.0};
  if (e != 0) Aw = matching_constant_A(ctx, tol);
  cplx C = -(std::log(ctx.q) / (4.0 * pi * (1.0 - ctx.q2()))) *
           cpow(ctx.mu, cplx{-2.0, -ctx.nu}) * Aw *
           std::pow(ctx.q, 0.25 * (4.0 - ctx.delta) * ctx.nu * ctx.nu - 0.5 * ctx.delta);
  cplx scale = C * std::sqrt(ctx.q);
  double tail = detail::barnes_tail_bound(ctx, x, contour, tol) * std::abs(scale);
  return {scale * V, nodes, tail};
}

struct BarnesReport {
  SeriesValue value;
  double T_used = 0.0;
  double tail_bound = 0.0;  // same scale as value
  bool converged = false;
};

// T doubles from 20 until the analytic tail bound meets the tolerance.  The
// flat delta=0 envelope never does: one evaluation at the 400 cap, reported
// non-converged.
inline BarnesReport barnes_K_adaptive(const QContext& ctx, BesselKind kind, double x,
                                      const Tolerances& tol = {}) {
  const double Tcap = 400.0;
  if (ctx.delta == 0) {
    SeriesValue v = barnes_K(ctx, kind, x, default_contour(ctx, Tcap), tol);
    return {v, Tcap, v.tail_estimate, false};
  }
  double T = 20.0;
  for (;;) {
    SeriesValue v = barnes_K(ctx, kind, x, default_contour(ctx, T), tol);
    bool ok = v.tail_estimate <= tol.rel_eps * std::abs(v.value) + tol.abs_eps;
    if (ok || T >= Tcap) return {v, T, v.tail_estimate, ok};
    T = std::min(2.0 * T, Tcap);
  }
}

// Forward transform of the decaying combination, truncated where the
// integrand envelope dips before the combination regrows (the full ray
// integral diverges, so the truncated value carries the dip-level floor).
inline cplx mellin_forward(const QContext& ctx, BesselKind kind, cplx s,
                           const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  if (!(s.real() > 1.0))
    throw std::domain_error("mellin_forward: need Re s > 1 inside the usable strip");
  double hi = 60.0;
  if (ctx.delta == 2) hi = 0.9 * ctx.q / (ctx.mu * (1.0 - ctx.q2()));
  const double lo = std::min(0.5, 0.25 * hi);
  auto env = [&](double x) {
    return std::abs(macdonald_K(ctx, kind, x, tol).value) * std::pow(x, s.real() - 1.0);
  };
  double best_x = lo, best_v = env(lo);
  for (int i = 1; i <= 240; ++i) {
    double x = lo * std::exp(std::log(hi / lo) * i / 240.0);
    double v = env(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  const double R = best_x;
  const int panels = 600;
  const double h = R / panels;
  auto f = [&](double x) -> cplx {
    if (x == 0.0) return {0.0, 0.0};
    return macdonald_K(ctx, kind, x, tol).value * cpow(x, s - 1.0);
  };
  cplx acc = f(0.0) + f(R);
  for (int j = 1; j < panels; ++j) acc += f(j * h) * ((j % 2) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Closed-form normalization constant the forward transform chases:
//   B = -(2(1-q^2)/ln q) mu^{i nu+2} A_{-i nu}^{|1-delta|} q^{-(4-delta)nu^2/4 + delta/2}.
inline cplx normalization_B(const QContext& ctx, const Tolerances& tol = {}) {
  const int e = std::abs(1 - ctx.delta);
  cplx Aw{1.0, 0.0};
  if (e != 0) Aw = matching_constant_A_order(ctx, cplx{0.0, -ctx.nu}, tol);
  return -(2.0 * (1.0 - ctx.q2()) / std::log(ctx.q)) * cpow(ctx.mu, cplx{2.0, ctx.nu}) *
         Aw *
         std::pow(ctx.q, -0.25 * (4.0 - ctx.delta) * ctx.nu * ctx.nu + 0.5 * ctx.delta);
}

// Empirical constant: q^{1/2} g(s) over the truncated forward transform.
inline cplx extract_B(const QContext& ctx, BesselKind kind, cplx s,
                      const Tolerances& tol = {}) {
  return std::sqrt(ctx.q) * g_of_s(s, ctx, tol) / mellin_forward(ctx, kind, s, tol);
}

// Decaying combination at general complex order lam, reduced argument x:
//   1/2 q^{-lam^2+lam} G(lam) G(1-lam) [A_lam^e I_{-lam} - A_{-lam}^e I_{lam}].
inline cplx macdonald_K_order(const QContext& ctx, cplx lam, double x,
                              const Tolerances& tol = {}) {
  const double Q = ctx.q2();
  const int e = std::abs(1 - ctx.delta);
  cplx wp{1.0, 0.0}, wm{1.0, 0.0};
  if (e != 0) {
    wp = matching_constant_A_order(ctx, lam, tol);
    wm = matching_constant_A_order(ctx, -lam, tol);
  }
  cplx pref = 0.5 * cpow(ctx.q, -lam * lam + lam) * qgamma(lam, Q, tol).value *
              qgamma(cplx{1.0, 0.0} - lam, Q, tol).value;
  return pref * (wp * modified_I_order(ctx, -lam, x, tol).value -
                 wm * modified_I_order(ctx, lam, x, tol).value);
}

// One-step difference quotient (f(x) - f(qx)) / ((1-q) x).
template <class F>
inline cplx q_forward_difference(F&& f, double x, double q) {
  return (f(x) - f(q * x)) / ((1.0 - q) * x);
}

// Order-lowering residual: the difference quotient of x^{i nu} K_{i nu}
// reproduces -q^{-(2-delta)(i nu-1)/2} x^{i nu-1} K_{i nu-1} at the
// q^{1-delta/2}-rescaled argument.  Max relative residual over sample_x.
inline double ladder_identity_check(const QContext& ctx, BesselKind kind,
                                    const std::vector<double>& sample_x,
                                    const Tolerances& tol = {}) {
  detail::check_kind(ctx, kind);
  if (sample_x.empty())
    throw std::domain_error("ladder_identity_check: need at least one sample");
  const cplx inu{0.0, ctx.nu};
  double worst = 0.0;
  for (double x : sample_x) {
    if (!(x > 0.0)) throw std::domain_error("ladder_identity_check: samples must be positive");
    auto F = [&](double y) { return cpow(y, inu) * macdonald_K(ctx, kind, y, tol).value; };
    cplx lhs = std::pow(ctx.q, 0.5 * ctx.delta) / (ctx.mu * (1.0 + ctx.q) * x) *
               q_forward_difference(F, x, ctx.q);
    cplx rhs = -cpow(ctx.q, -0.5 * (2.0 - ctx.delta) * (inu - 1.0)) * cpow(x, inu - 1.0) *
               macdonald_K_order(ctx, inu - 1.0,
                                 std::pow(ctx.q, 1.0 - 0.5 * ctx.delta) * x, tol);
    worst = std::max(worst,
                     std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  return worst;
}

inline double ladder_identity_check(const QContext& ctx, BesselKind kind,
                                    const Tolerances& tol = {}) {
  // the delta=2 series is usable only inside its pole window
  std::vector<double> xs = ctx.delta == 2 ? std::vector<double>{0.1, 0.2, 0.3}
                                          : std::vector<double>{0.5, 1.0, 2.0};
  return ladder_identity_check(ctx, kind, xs, tol);
}

// Continuous boundary identity int_0^inf (f(x)-f(qx))/((1-q)x) dx =
// (ln q/(1-q)) f(0) for integrable smooth f; residual on f = exp(-x^2).
inline double boundary_identity_residual(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("boundary_identity_residual: q must lie inside (0,1)");
  auto f = [](double x) { return std::exp(-x * x); };
  auto integrand = [&](double x) {
    if (x == 0.0) return 0.0;
    return (f(x) - f(q * x)) / ((1.0 - q) * x);
  };
  const int panels = 8000;
  const double hi = 12.0 / q;  // the f(qx) hump needs range 12/q
  const double h = hi / panels;
  double acc = integrand(0.0) + integrand(hi);
  for (int j = 1; j < panels; ++j) acc += integrand(j * h) * ((j % 2) ? 4.0 : 2.0);
  double quad = acc * h / 3.0;
  return std::abs(quad - std::log(q) / (1.0 - q));
}

struct JacksonBoundaryReport {
  cplx jackson_value;      // telescoped lattice sum of the difference quotient
  double continuous_rhs;   // (ln q/(1-q)) f(0)
};

// The lattice-entire Gaussian (x^2;q^2)_inf violates the identity's
// integrability hypotheses; its lattice sum telescopes to exactly -f(0).
inline JacksonBoundaryReport boundary_identity_jackson(double q,
                                                       const Tolerances& tol = {}) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("boundary_identity_jackson: q must lie inside (0,1)");
  const double Q = q * q;
  auto f = [&](double x) {
    return qpochhammer_inf(cplx{x * x, 0.0}, Q, tol).value;
  };
  cplx acc{0.0, 0.0};
  for (int n = -10; n <= 60; ++n)
    acc += f(std::pow(q, n)) - f(std::pow(q, n + 1));
  return {acc, std::log(q) / (1.0 - q)};
}

}  // namespace qtoda
