#pragma once

// Invariant and lowering-covariant product vectors for the principal series,
// the scale-action matrix element as a continued radial integral, and the
// sesquilinear pairing that reassembles it.

#include <algorithm>
#include <vector>

#include "qtoda/qbessel.hpp"
#include "qtoda/qcalc.hpp"

namespace qtoda {

enum class VariableTag { z, zbar, x_abs2 };

struct PowerSeries1D {
  std::vector<cplx> coefficients;  // degree-indexed; c0 = 1 for normalized vectors
  VariableTag variable_tag = VariableTag::z;

  cplx eval(cplx w) const {
    cplx acc{0.0, 0.0};
    cplx p{1.0, 0.0};
    for (const cplx& c : coefficients) {
      acc += c * p;
      p *= w;
    }
    return acc;
  }
};

// coefficients[a][b] multiplies zbar^a z^b
struct PowerSeries2D {
  std::vector<std::vector<cplx>> coefficients;
};

struct MatrixElementResult {
  double H = 0.0;
  cplx value{0.0, 0.0};
  double quadrature_error = 0.0;  // truncation estimate of the evaluation route
  int terms = 0;
};

namespace detail {

// Generator scalars at representation label 0.  The lowering step acts on
// z^k from the right and on zbar^m from the left with the same numbers; the
// raising step likewise.  Constants are annihilated by the lowering step.
inline cplx pi_lower(const QContext& ctx, int k) {
  if (k <= 0) return {0.0, 0.0};
  const double q = ctx.q;
  return cpow(q, cplx{0.0, 0.5 * ctx.nu}) * (std::pow(q, -k) - std::pow(q, k)) /
         (1.0 - q * q);
}

inline cplx pi_raise(const QContext& ctx, int m) {
  const double q = ctx.q;
  return (-cpow(q, cplx{1.0, 0.5 * ctx.nu}) * std::pow(q, -m) +
          cpow(q, cplx{3.0, -1.5 * ctx.nu}) * std::pow(q, m)) /
         (1.0 - q * q);
}

}  // namespace detail

// Closed two-product form of the invariant vector in x = |z|^2.  sign picks
// the branch of the spectral phase in the first product; sign=-1 is the
// vector itself, sign=+1 its complex conjugate (the pairing-side weight).
inline SeriesValue psi_L_variant(double x, const QContext& ctx, int sign,
                                 const Tolerances& tol = {}) {
  if (!(x >= 0.0)) throw std::domain_error("psi_L: x must be nonnegative");
  if (sign != 1 && sign != -1) throw std::domain_error("psi_L: sign must be +1 or -1");
  const double Q = ctx.q2();
  SeriesValue num = qpochhammer_inf(-cpow(ctx.q, cplx{4.0, sign * 2.0 * ctx.nu}) * x, Q, tol);
  SeriesValue den = qpochhammer_inf(cplx{-Q * x, 0.0}, Q, tol);
  const double tiny = 1e-300;
  cplx v = num.value / den.value;
  double rel = num.tail_estimate / std::max(std::abs(num.value), tiny) +
               den.tail_estimate / std::max(std::abs(den.value), tiny);
  return {v, std::max(num.terms_used, den.terms_used), rel * std::abs(v)};
}

inline SeriesValue psi_L(double x, const QContext& ctx, const Tolerances& tol = {}) {
  return psi_L_variant(x, ctx, -1, tol);
}

// Same vector by its diagonal coefficients beta_m, beta_0 = 1,
//   beta_{m+1}/beta_m = -q^2 (1 - q^{2 + 2 sign i nu} q^{2m}) / (1 - q^{2m+2}).
inline PowerSeries1D psi_L_series(const QContext& ctx, int N, int sign = -1) {
  if (N < 0) throw std::domain_error("psi_L_series: N must be nonnegative");
  const double Q = ctx.q2();
  const cplx a = cpow(ctx.q, cplx{2.0, sign * 2.0 * ctx.nu});
  PowerSeries1D out;
  out.variable_tag = VariableTag::x_abs2;
  out.coefficients.resize(static_cast<std::size_t>(N) + 1);
  cplx beta{1.0, 0.0};
  out.coefficients[0] = beta;
  for (int m = 0; m < N; ++m) {
    beta *= -Q * (1.0 - a * std::pow(Q, m)) / (1.0 - std::pow(Q, m + 1));
    out.coefficients[static_cast<std::size_t>(m) + 1] = beta;
  }
  return out;
}

// Worst mismatch of the covariance condition (left raising application equals
// right lowering application) on the diagonal coefficients through degree N.
inline double invariant_covariance_residual(const QContext& ctx, int N, int sign) {
  PowerSeries1D s = psi_L_series(ctx, N + 1, sign);
  double worst = 0.0;
  for (int m = 0; m <= N; ++m) {
    cplx lhs = s.coefficients[static_cast<std::size_t>(m)] * detail::pi_raise(ctx, m);
    cplx rhs =
        s.coefficients[static_cast<std::size_t>(m) + 1] * detail::pi_lower(ctx, m + 1);
    double den = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / den);
  }
  return worst;
}

// Both sign branches appear in print; only one satisfies the covariance
// condition.  The report states which, instead of silently picking.
struct InvarianceReport {
  double residual_minus = 0.0;
  double residual_plus = 0.0;
  bool minus_satisfies = false;
};

inline InvarianceReport psi_L_invariance(const QContext& ctx, int N) {
  InvarianceReport r;
  r.residual_minus = invariant_covariance_residual(ctx, N, -1);
  r.residual_plus = invariant_covariance_residual(ctx, N, +1);
  r.minus_satisfies = r.residual_minus < r.residual_plus;
  return r;
}

// Bare coefficient laws of the product vector.  The antiholomorphic factor
// carries a_n, the holomorphic factor c_k; mu sits inside both.
inline cplx coeff_a(const QContext& ctx, int n) {
  const cplx imu{0.0, ctx.mu};
  return std::pow(imu, n) *
         cpow(ctx.q, cplx{0.5 * n * (n - 1.0) + n, -ctx.nu * n});
}

inline cplx coeff_c(const QContext& ctx, int k) {
  const cplx imu{0.0, ctx.mu};
  const double g = 3.0 - 2.0 * ctx.delta;
  return std::pow(imu, k) *
         cpow(ctx.q, cplx{0.5 * k * (k - 1.0) * g + k * g, ctx.nu * k * (ctx.delta - 1.0)});
}

// Full series coefficients including the balanced-denominator frame.
inline cplx xi1_coefficient(const QContext& ctx, int n) {
  const double Q = ctx.q2();
  cplx frame{1.0, 0.0};
  for (int i = 1; i <= n; ++i) frame *= (1.0 - Q) / (1.0 - std::pow(Q, i));
  return coeff_a(ctx, n) * frame;
}

inline cplx xi2_coefficient(const QContext& ctx, int k) {
  const double Q = ctx.q2();
  cplx frame{1.0, 0.0};
  for (int i = 1; i <= k; ++i) frame *= (1.0 - Q) / (1.0 - std::pow(Q, i));
  return coeff_c(ctx, k) * frame;
}

inline SeriesValue xi1(cplx zbar, const QContext& ctx, const Tolerances& tol = {}) {
  const double Q = ctx.q2();
  cplx t{1.0, 0.0};
  cplx acc{1.0, 0.0};
  int n = 0;
  int consec = 0;
  double last = 1.0;
  while (n < tol.max_terms) {
    if (last < tol.rel_eps * std::abs(acc) + tol.abs_eps) {
      if (++consec >= 3) break;
    } else {
      consec = 0;
    }
    cplx r = cplx{0.0, ctx.mu} * (1.0 - Q) *
             cpow(ctx.q, cplx{n + 1.0, -ctx.nu}) / (1.0 - std::pow(Q, n + 1)) * zbar;
    t *= r;
    acc += t;
    last = std::abs(t);
    ++n;
  }
  return {acc, std::max(n, 1), last / (1.0 - Q)};
}

// Term ratio scales like q^{(k+1)(3-2 delta)}: convergent everywhere for
// delta < 3/2, asymptotic with a finite usable radius |z| < q/mu for
// delta = 2 (optimal truncation at the smallest term, honest tail).
inline SeriesValue xi2(cplx z, const QContext& ctx, const Tolerances& tol = {}) {
  const double Q = ctx.q2();
  const double g = 3.0 - 2.0 * ctx.delta;
  cplx t{1.0, 0.0};
  cplx acc{1.0, 0.0};
  int k = 0;
  int consec = 0;
  double last = 1.0;
  while (k < tol.max_terms) {
    if (last < tol.rel_eps * std::abs(acc) + tol.abs_eps) {
      if (++consec >= 3) break;
    } else {
      consec = 0;
    }
    cplx r = cplx{0.0, ctx.mu} * (1.0 - Q) *
             cpow(ctx.q, cplx{(k + 1.0) * g, ctx.nu * (ctx.delta - 1.0)}) /
             (1.0 - std::pow(Q, k + 1)) * z;
    if (ctx.delta == 2 && std::abs(r) >= 1.0) {
      if (k == 0)
        throw std::domain_error("xi2: argument outside the usable radius for delta=2");
      return {acc, k, std::abs(t) * std::abs(r)};
    }
    t *= r;
    acc += t;
    last = std::abs(t);
    ++k;
  }
  return {acc, std::max(k, 1), last / (1.0 - Q)};
}

inline PowerSeries1D xi1_series(const QContext& ctx, int N) {
  PowerSeries1D out;
  out.variable_tag = VariableTag::zbar;
  out.coefficients.resize(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n <= N; ++n)
    out.coefficients[static_cast<std::size_t>(n)] = xi1_coefficient(ctx, n);
  return out;
}

inline PowerSeries1D xi2_series(const QContext& ctx, int N) {
  PowerSeries1D out;
  out.variable_tag = VariableTag::z;
  out.coefficients.resize(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k)
    out.coefficients[static_cast<std::size_t>(k)] = xi2_coefficient(ctx, k);
  return out;
}

// Worst mismatch, through bidegree N, between the double lowering of the
// product vector and its scaled reindexing
//   lower* . psi . lower = -mu^2 q^{(i nu - 2)(delta - 1)} psi(zbar, q^{2-2 delta} z).
inline double whittaker_condition_residual(const QContext& ctx, int N) {
  if (N < 2) throw std::domain_error("whittaker_condition_residual: N must be >= 2");
  std::vector<cplx> A(static_cast<std::size_t>(N) + 1), C(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) {
    A[static_cast<std::size_t>(i)] = xi1_coefficient(ctx, i);
    C[static_cast<std::size_t>(i)] = xi2_coefficient(ctx, i);
  }
  const cplx pref =
      -ctx.mu * ctx.mu *
      cpow(ctx.q, cplx{-2.0 * (ctx.delta - 1.0), ctx.nu * (ctx.delta - 1.0)});
  const double shift = std::pow(ctx.q, 2.0 - 2.0 * ctx.delta);
  double worst = 0.0;
  for (int n = 0; n + 1 <= N; ++n)
    for (int k = 0; k + 1 <= N; ++k) {
      cplx lhs = detail::pi_lower(ctx, n + 1) * detail::pi_lower(ctx, k + 1) *
                 A[static_cast<std::size_t>(n) + 1] * C[static_cast<std::size_t>(k) + 1];
      cplx rhs = pref * std::pow(shift, k) * A[static_cast<std::size_t>(n)] *
                 C[static_cast<std::size_t>(k)];
      double den = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / den);
    }
  return worst;
}

// Continued radial moment of the pairing weight against rho^{2k+1}.  The
// literal integral converges for no k; the value is the boundary limit of
// the classical product formula, finite off the degenerate phase lattice.
inline cplx weight_moment(const QContext& ctx, int k) {
  if (k < 0) throw std::domain_error("weight_moment: k must be nonnegative");
  const cplx spectral = 1.0 - cpow(ctx.q, cplx{0.0, 2.0 * ctx.nu});
  if (std::abs(spectral) < 1e-12)
    throw std::domain_error("weight_moment: degenerate spectral parameter");
  const double Q = ctx.q2();
  // the two k-products are interleaved factor by factor; separately each
  // side overflows near k = 30 while the quotient stays O(1)
  cplx ratio{1.0, 0.0};
  for (int j = 1; j <= k; ++j)
    ratio *= (1.0 - std::pow(Q, -j)) /
             (1.0 - cpow(ctx.q, cplx{-2.0 * j, 2.0 * ctx.nu}));
  cplx R = ((k % 2 == 0) ? 1.0 : -1.0) * (-2.0 * std::log(ctx.q)) * ratio / spectral;
  return R / (2.0 * std::pow(ctx.q, 2 * k + 2));
}

// Pairing-side weight (the conjugated invariant vector).
inline SeriesValue invariant_weight(const QContext& ctx, double x,
                                    const Tolerances& tol = {}) {
  return psi_L_variant(x, ctx, +1, tol);
}

// Partial sums of the weight's binomial-quotient expansion; valid inside
// |q^2 x| < 1 only.
inline cplx weight_qbinomial_partial(const QContext& ctx, double x, int terms) {
  const double Q = ctx.q2();
  const cplx a = cpow(ctx.q, cplx{2.0, 2.0 * ctx.nu});
  cplx acc{1.0, 0.0};
  cplx t{1.0, 0.0};
  for (int m = 0; m < terms; ++m) {
    t *= (1.0 - a * std::pow(Q, m)) / (1.0 - std::pow(Q, m + 1)) * (-Q * x);
    acc += t;
  }
  return acc;
}

// Matrix element of the scale action between the invariant and covariant
// vectors, assembled term by term from the continued moments.  The result
// satisfies the three-point difference equation in H to machine precision.
// quadrature_error carries the series truncation estimate.
inline MatrixElementResult matrix_element_radial(double H, const QContext& ctx,
                                                 const Tolerances& tol = {}) {
  if (!(H > 0.0)) throw std::domain_error("matrix_element_radial: H must be positive");
  const double q = ctx.q;
  const double Q = ctx.q2();
  double ratio_cap = 0.0;
  if (ctx.delta == 2) {
    // no quadratic damping remains; geometric convergence needs H clear of
    // the pole window
    ratio_cap = ctx.mu * (1.0 - Q) / (q * H);
    ratio_cap *= ratio_cap;
    if (!(ratio_cap < 0.9025))
      throw std::domain_error("matrix_element_radial: H inside the delta=2 pole window");
  }
  cplx acc{0.0, 0.0};
  cplx pochsq{1.0, 0.0};
  double last = 0.0;
  int n = 0;
  int consec = 0;
  while (n < tol.max_terms) {
    cplx term = ((n % 2 == 0) ? 1.0 : -1.0) *
                cpow(q, cplx{(2.0 - ctx.delta) * n * (n + 1.0), ctx.nu * ctx.delta * n}) *
                std::pow((1.0 - Q) * ctx.mu / H, 2 * n) * weight_moment(ctx, n) /
                pochsq;
    acc += term;
    last = std::abs(term);
    if (last < tol.rel_eps * std::abs(acc) + tol.abs_eps) {
      if (++consec >= 3) break;
    } else {
      consec = 0;
    }
    cplx p = 1.0 - std::pow(Q, n + 1);
    pochsq *= p * p;
    ++n;
  }
  double geom = (ctx.delta == 2) ? 1.0 / (1.0 - ratio_cap) : 1.0 / (1.0 - Q);
  cplx pref = 4.0 * pi * cpow(q, cplx{-1.0, ctx.nu}) * cpow(H, cplx{-1.0, ctx.nu});
  MatrixElementResult r;
  r.H = H;
  r.value = pref * acc;
  r.quadrature_error = std::abs(pref) * last * geom;
  r.terms = std::max(n, 1);
  return r;
}

// The moment route lands exactly on one decaying-order series:
//   value = frobenius_constant * H^{-1} * I_{-i nu}(at 1/H).
inline cplx frobenius_constant(const QContext& ctx, const Tolerances& tol = {}) {
  return 4.0 * pi * cpow(ctx.q, cplx{-1.0, ctx.nu}) * weight_moment(ctx, 0) *
         qgamma(cplx{1.0, -ctx.nu}, ctx.q2(), tol).value *
         cpow(ctx.q, cplx{0.0, -0.5 * ctx.nu * ctx.delta}) *
         cpow(ctx.mu, cplx{0.0, ctx.nu});
}

inline double frobenius_identification_residual(double H, const QContext& ctx,
                                                const Tolerances& tol = {}) {
  cplx F = matrix_element_radial(H, ctx, tol).value;
  cplx I = modified_I(ctx, BesselKind::for_delta(ctx.delta), -1, 1.0 / H, tol).value;
  cplx rhs = frobenius_constant(ctx, tol) * I / H;
  return std::abs(F - rhs) / std::max(std::abs(F), 1e-300);
}

// Relative residual of the three-point difference equation in H satisfied by
// the matrix element.
inline double matrix_element_equation_residual(const QContext& ctx, double H,
                                               const Tolerances& tol = {}) {
  const double q = ctx.q;
  auto F = [&](double h) { return matrix_element_radial(h, ctx, tol).value; };
  cplx lam = cpow(q, cplx{0.0, ctx.nu}) + cpow(q, cplx{0.0, -ctx.nu});
  cplx t1 = q * F(q * H);
  cplx t2 = -lam * F(H);
  cplx t3 = F(H / q) / q;
  cplx t4 = -ctx.mu * ctx.mu * std::pow(q, -ctx.delta - 1.0) / (H * H) *
            (1.0 - q * q) * (1.0 - q * q) * F(std::pow(q, ctx.delta - 1.0) * H);
  double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4), 1e-300});
  return std::abs(t1 + t2 + t3 + t4) / scale;
}

// Integrand of the direct radial form; vanishes at rho = 0.
inline cplx radial_integrand(const QContext& ctx, double H, double rho,
                             const Tolerances& tol = {}) {
  if (rho == 0.0) return {0.0, 0.0};
  cplx w = invariant_weight(ctx, rho * rho, tol).value;
  cplx zred = cpow(ctx.q, cplx{1.0, 0.5 * ctx.nu * ctx.delta}) * rho / H;
  cplx j = bessel_J0(ctx, BesselKind::for_delta(ctx.delta), zred, tol).value;
  return w * j * rho;
}

// Direct quadrature truncated at the dip of the integrand envelope.  The
// literal integral diverges (the oscillatory factor regrows), so the
// reported error carries the O(1) truncation floor of the dip, not a
// convergence bound.
inline MatrixElementResult matrix_element_quadrature(double H, const QContext& ctx,
                                                     const Tolerances& tol = {}) {
  if (!(H > 0.0))
    throw std::domain_error("matrix_element_quadrature: H must be positive");
  double lo = 0.05;
  double hi = 80.0;
  if (ctx.delta == 2)
    hi = std::min(hi, 0.9 * ctx.q * H / (ctx.mu * (1.0 - ctx.q2())));
  double best_rho = lo;
  double best = 1e300;
  const int scan = 400;
  for (int i = 0; i <= scan; ++i) {
    double rho = lo * std::pow(hi / lo, static_cast<double>(i) / scan);
    double g = std::abs(radial_integrand(ctx, H, rho, tol));
    if (g < best) {
      best = g;
      best_rho = rho;
    }
  }
  auto simpson = [&](int panels) {
    double h = best_rho / (2 * panels);
    cplx s = radial_integrand(ctx, H, 0.0, tol) +
             radial_integrand(ctx, H, best_rho, tol);
    for (int i = 1; i < 2 * panels; ++i)
      s += radial_integrand(ctx, H, i * h, tol) * ((i % 2 == 1) ? 4.0 : 2.0);
    return s * (h / 3.0);
  };
  cplx coarse = simpson(400);
  cplx fine = simpson(800);
  cplx pref = 4.0 * pi * cpow(ctx.q, cplx{-1.0, ctx.nu}) * cpow(H, cplx{-1.0, ctx.nu});
  MatrixElementResult r;
  r.H = H;
  r.value = pref * fine;
  r.quadrature_error =
      std::abs(pref) * (best * best_rho + std::abs(fine - coarse) / 15.0);
  r.terms = 1600;
  return r;
}

// Coefficient table of the scale-shifted covariant vector,
//   H^{i nu - 1} xi1(zbar) xi2(H^{-2} z).
inline PowerSeries2D group_shifted_whittaker(const QContext& ctx, double H, int N) {
  if (!(H > 0.0))
    throw std::domain_error("group_shifted_whittaker: H must be positive");
  PowerSeries2D g;
  g.coefficients.assign(static_cast<std::size_t>(N) + 1,
                        std::vector<cplx>(static_cast<std::size_t>(N) + 1, cplx{0.0, 0.0}));
  cplx pref = cpow(H, cplx{-1.0, ctx.nu});
  for (int c = 0; c <= N; ++c)
    for (int d = 0; d <= N; ++d)
      g.coefficients[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] =
          pref * xi1_coefficient(ctx, c) * xi2_coefficient(ctx, d) *
          std::pow(H, -2.0 * d);
  return g;
}

// Sesquilinear pairing in the moment model.  The left slot is taken relative
// to the invariant vector: its conjugate supplies the decaying weight whose
// continued moments close the radial integral.  Pass the unit table to pair
// the invariant vector itself.
inline cplx hermitian_form(const PowerSeries2D& f, const PowerSeries2D& g,
                           const QContext& ctx, const Tolerances& = {}) {
  int maxk = 0;
  for (std::size_t a = 0; a < f.coefficients.size(); ++a)
    for (std::size_t c = 0; c < g.coefficients.size(); ++c)
      maxk = std::max(maxk, static_cast<int>(f.coefficients[a].size() + c));
  std::vector<cplx> N(static_cast<std::size_t>(maxk) + 1);
  for (int k = 0; k <= maxk; ++k) N[static_cast<std::size_t>(k)] = weight_moment(ctx, k);
  cplx acc{0.0, 0.0};
  for (std::size_t a = 0; a < f.coefficients.size(); ++a)
    for (std::size_t b = 0; b < f.coefficients[a].size(); ++b) {
      if (f.coefficients[a][b] == cplx{0.0, 0.0}) continue;
      for (std::size_t c = 0; c < g.coefficients.size(); ++c)
        for (std::size_t d = 0; d < g.coefficients[c].size(); ++d) {
          if (a + d != b + c) continue;
          acc += std::conj(f.coefficients[a][b]) * g.coefficients[c][d] *
                 cpow(ctx.q, cplx{static_cast<double>(c) - static_cast<double>(d),
                                  ctx.nu * static_cast<double>(c + d)}) *
                 N[b + c];
        }
    }
  return 4.0 * pi * cpow(ctx.q, cplx{-1.0, ctx.nu}) * acc;
}

}  // namespace qtoda
