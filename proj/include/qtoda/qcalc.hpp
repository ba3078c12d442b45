#pragma once

// Foundational q-calculus kernel over complex doubles: q-Pochhammer symbols,
// q-Gamma, q-exponentials, symmetric q-numbers, Jackson derivatives and
// Jackson integrals on geometric grids.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>

namespace qtoda {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

struct Tolerances {
  double rel_eps = 1e-12;
  double abs_eps = 1e-300;
  int max_terms = 10000;
};

// Complex value plus truncation diagnostics.  converged() encodes the
// contract: tail_estimate <= rel_eps*|value| + abs_eps.
struct SeriesValue {
  cplx value{0.0, 0.0};
  int terms_used = 1;
  double tail_estimate = 0.0;

  bool converged(const Tolerances& tol = {}) const {
    return tail_estimate <= tol.rel_eps * std::abs(value) + tol.abs_eps;
  }
};

// Base parameters shared by every numeric operation.
// kappa = q^delta is formed as a repeated product, never through pow().
struct QContext {
  double q;
  int delta;
  double mu;
  double nu;

  QContext(double q_, int delta_, double mu_, double nu_)
      : q(q_), delta(delta_), mu(mu_), nu(nu_) {
    if (!(q > 0.0 && q < 1.0))
      throw std::domain_error("QContext: q must lie strictly inside (0,1)");
    if (delta != 0 && delta != 1 && delta != 2)
      throw std::domain_error("QContext: delta must be 0, 1 or 2");
    if (!(mu > 0.0)) throw std::domain_error("QContext: mu must be positive");
    if (!std::isfinite(nu)) throw std::domain_error("QContext: nu must be finite");
  }

  double kappa() const {
    double k = 1.0;
    for (int i = 0; i < delta; ++i) k *= q;
    return k;
  }
  double q2() const { return q * q; }
};

// Principal branch: w^z = exp(z log w).  For real positive w the real log is
// used, so q^x = exp(x ln q) with ln q < 0 real.
inline cplx cpow(double w, cplx z) {
  if (!(w > 0.0)) throw std::domain_error("cpow: real base must be positive");
  return std::exp(z * std::log(w));
}
inline cplx cpow(cplx w, cplx z) {
  if (w == cplx(0.0, 0.0)) {
    if (z == cplx(0.0, 0.0)) return {1.0, 0.0};
    return {0.0, 0.0};
  }
  return std::exp(z * std::log(w));
}

// (a;q)_n, finite: exact product of n factors.
inline SeriesValue qpochhammer(cplx a, double q, int n, const Tolerances& = {}) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("qpochhammer: q must lie strictly inside (0,1)");
  if (n < 0) throw std::domain_error("qpochhammer: n must be nonnegative");
  cplx p{1.0, 0.0};
  cplx aq = a;
  for (int k = 0; k < n; ++k) {
    p *= cplx{1.0, 0.0} - aq;
    aq *= q;
  }
  return {p, n > 0 ? n : 1, 0.0};
}

// (a;q)_infinity.  Factors are multiplied until a*q^k can no longer move the
// double product; the reported tail is the geometric bound |p|*|a q^k|/(1-q).
inline SeriesValue qpochhammer_inf(cplx a, double q, const Tolerances& tol = {}) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("qpochhammer_inf: q must lie strictly inside (0,1)");
  const double floor_mag = std::max(tol.abs_eps, 1e-30);
  cplx p{1.0, 0.0};
  cplx aq = a;
  int k = 0;
  while (k < tol.max_terms) {
    if (std::abs(aq) < floor_mag) break;
    p *= cplx{1.0, 0.0} - aq;
    aq *= q;
    ++k;
  }
  double tail = std::abs(p) * std::abs(aq) / (1.0 - q);
  return {p, k > 0 ? k : 1, tail};
}

struct infinity_t {};
inline constexpr infinity_t infinity{};
inline SeriesValue qpochhammer(cplx a, double q, infinity_t, const Tolerances& tol = {}) {
  return qpochhammer_inf(a, q, tol);
}

inline bool is_nonpositive_integer(cplx x) {
  if (std::abs(x.imag()) > 1e-12) return false;
  double r = std::round(x.real());
  return r <= 0.0 && std::abs(x.real() - r) < 1e-12;
}

// Gamma_base(x) = (base;base)_inf (1-base)^{1-x} / (base^x;base)_inf.
// Poles at x = 0, -1, -2, ... are rejected.
inline SeriesValue qgamma(cplx x, double base, const Tolerances& tol = {}) {
  if (!(base > 0.0 && base < 1.0))
    throw std::domain_error("qgamma: base must lie strictly inside (0,1)");
  if (is_nonpositive_integer(x))
    throw std::domain_error("qgamma: pole at nonpositive integer argument");
  SeriesValue num = qpochhammer_inf(cplx{base, 0.0}, base, tol);
  SeriesValue den = qpochhammer_inf(cpow(base, x), base, tol);
  cplx v = num.value / den.value * cpow(1.0 - base, cplx{1.0, 0.0} - x);
  const double tiny = std::numeric_limits<double>::min();
  double rel = num.tail_estimate / std::max(std::abs(num.value), tiny) +
               den.tail_estimate / std::max(std::abs(den.value), tiny);
  return {v, num.terms_used + den.terms_used, rel * std::abs(v)};
}

// e_base(x) = 1/(x;base)_inf, defined for |x| < 1.
inline SeriesValue qexp_small(cplx x, double base, const Tolerances& tol = {}) {
  if (!(std::abs(x) < 1.0))
    throw std::domain_error("qexp_small: |x| must be < 1");
  SeriesValue den = qpochhammer_inf(x, base, tol);
  cplx v = cplx{1.0, 0.0} / den.value;
  const double tiny = std::numeric_limits<double>::min();
  return {v, den.terms_used,
          den.tail_estimate / std::max(std::abs(den.value), tiny) * std::abs(v)};
}

// E_base(x) = (-x;base)_inf, entire.
inline SeriesValue qexp_big(cplx x, double base, const Tolerances& tol = {}) {
  return qpochhammer_inf(-x, base, tol);
}

// Symmetric q-number [x]_q = (q^x - q^{-x})/(q - q^{-1}).
inline cplx qnumber(cplx x, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("qnumber: q must lie strictly inside (0,1)");
  return (cpow(q, x) - cpow(q, -x)) / cplx{q - 1.0 / q, 0.0};
}

// The two divided-difference variants: scale_q2 uses scale q^2 and divisor
// (1-q^2)x, scale_q uses scale q and divisor (1-q)x.
enum class DiffScale { scale_q2, scale_q };

template <class F>
cplx jackson_derivative(F&& f, cplx x, double q, DiffScale variant) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("jackson_derivative: q must lie strictly inside (0,1)");
  if (x == cplx{0.0, 0.0})
    throw std::domain_error("jackson_derivative: x must be nonzero");
  if (variant == DiffScale::scale_q2) {
    double s = q * q;
    return (f(x) - f(s * x)) / ((1.0 - s) * x);
  }
  return (f(x) - f(q * x)) / ((1.0 - q) * x);
}

enum class JacksonDomain { half_line, bilateral };

namespace detail {
// One geometric ray sum_{n in Z} q^n g(q^n anchor); each direction stops
// after 3 consecutive negligible terms, and max_terms caps each direction.
template <class G>
SeriesValue jackson_ray(G&& g, double q, double anchor, const Tolerances& tol) {
  cplx acc{0.0, 0.0};
  int used = 0;
  double tail = 0.0;
  bool ok = true;
  auto run = [&](double start_w, double ratio) {
    int consec = 0;
    double w = start_w;
    double last = 0.0;
    for (int n = 0; n < tol.max_terms; ++n) {
      cplx t = w * g(w * anchor);
      acc += t;
      ++used;
      last = std::abs(t);
      if (last < tol.rel_eps * std::abs(acc) + tol.abs_eps) {
        if (++consec >= 3) return last;
      } else {
        consec = 0;
      }
      w *= ratio;
    }
    ok = false;
    return last;
  };
  double t_down = run(1.0, q);        // n = 0, 1, 2, ... toward zero
  double t_up = run(1.0 / q, 1.0 / q);  // n = -1, -2, ... toward infinity
  tail = (t_down + t_up) / (1.0 - q);
  if (!ok) tail = std::max(tail, std::abs(acc) + 1.0);
  return {acc, used, tail};
}
}  // namespace detail

// Jackson integral (1-q) sum q^n f(q^n anchor) anchor over the geometric
// grid through anchor; bilateral adds the mirrored ray through -anchor.
template <class F>
SeriesValue jackson_integral(F&& f, double q, JacksonDomain domain, double anchor,
                             const Tolerances& tol = {}) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("jackson_integral: q must lie strictly inside (0,1)");
  if (!(anchor > 0.0))
    throw std::domain_error("jackson_integral: anchor must be positive");
  SeriesValue pos = detail::jackson_ray([&](double x) { return f(cplx{x, 0.0}); },
                                        q, anchor, tol);
  cplx v = (1.0 - q) * anchor * pos.value;
  double tail = (1.0 - q) * anchor * pos.tail_estimate;
  int used = pos.terms_used;
  if (domain == JacksonDomain::bilateral) {
    SeriesValue neg = detail::jackson_ray(
        [&](double x) { return f(cplx{-x, 0.0}); }, q, anchor, tol);
    v += (1.0 - q) * anchor * neg.value;
    tail += (1.0 - q) * anchor * neg.tail_estimate;
    used += neg.terms_used;
  }
  return {v, used, tail};
}

}  // namespace qtoda
