#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "qtoda/hopf.hpp"
#include "qtoda/toda.hpp"

using namespace qtoda;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Count failures in a relation report; keep the first mismatch readable.
std::pair<int, std::string> tally(const std::vector<RelationCheck>& rep) {
  int bad = 0;
  std::string first;
  for (const auto& r : rep)
    if (!r.ok) {
      if (bad == 0) first = r.relation + " at " + r.element + ": " + r.mismatch;
      ++bad;
    }
  return {bad, first};
}

}  // namespace

TEST_CASE("exact scalar arithmetic and denominator bookkeeping", "[hopf][scalar]") {
  FormalScalar x = FormalScalar::monomial(3, 1, mpq_class(2, 5));
  FormalScalar lifted = x.lift_to(2);
  CHECK(lifted.den_pow == 2);
  CHECK(lifted == x);
  lifted.canonicalize();
  CHECK(lifted.den_pow == 0);
  CHECK(lifted.num == x.num);

  // (1-q^6)/(1-q^2) = 1 + q^2 + q^4, and the negative-index continuation
  CHECK(fs_one_minus_over(12, 0) == fs_geom2(3));
  FormalScalar g3 = FormalScalar::monomial(0, 0) + FormalScalar::monomial(4, 0) +
                    FormalScalar::monomial(8, 0);
  CHECK(fs_geom2(3) == g3);
  FormalScalar gm2 =
      -(FormalScalar::monomial(-8, 0) + FormalScalar::monomial(-4, 0));
  CHECK(fs_geom2(-2) == gm2);

  // conjugation flips u-powers only
  CHECK(FormalScalar::monomial(2, 3, 7).conj() == FormalScalar::monomial(2, -3, 7));

  // (1-q)/(1-q^2) is not monomial-divisible; the fraction stays localized
  FormalScalar nd = fs_one_minus_over(2, 0);
  nd.canonicalize();
  CHECK(nd.den_pow == 1);

  // numeric substitution u = q^{i nu/2}
  double q = 0.5, nu = 0.8;
  CHECK_THAT(fs_eval(nd, q, nu).real(), WithinRel((1.0 - q) / (1.0 - q * q), 1e-14));
  cplx u2 = cpow(q, cplx{0.0, nu});
  cplx got = fs_eval(FormalScalar::monomial(0, 2), q, nu);
  CHECK_THAT(std::abs(got - u2), WithinAbs(0.0, 1e-15));
}

TEST_CASE("generator actions on ordered monomials: worked examples",
          "[hopf][action]") {
  for (int delta : {0, 1, 2}) {
    ModuleElement w000 = ModuleElement::basis(false, 0, 0, 0);
    CHECK(act_right(delta, Gen::A, w000) == w000);

    // lowering one z: coefficient q^{-1/2}
    ModuleElement w001 = ModuleElement::basis(false, 0, 0, 1);
    CHECK(act_right(delta, Gen::B, w001) ==
          FormalScalar::monomial(-1, 0) * w000);

    // raising on w(1,2,0): kappa q^{-3/2} w(0,0,0) + (q^{-3/2}+q^{1/2}) w(1,2,1)
    ModuleElement w120 = ModuleElement::basis(false, 1, 2, 0);
    ModuleElement expect =
        FormalScalar::monomial(2 * delta - 3, 0) * w000 +
        (FormalScalar::monomial(-3, 0) + FormalScalar::monomial(1, 0)) *
            ModuleElement::basis(false, 1, 2, 1);
    CHECK(act_right(delta, Gen::C, w120) == expect);

    // ladder bottoms and the vanishing cross-actions
    CHECK(act_right(delta, Gen::B, w000).is_zero());
    CHECK(act_left(delta, Gen::Bstar, w000).is_zero());
    CHECK(act_right(delta, Gen::Bstar, w120).is_zero());
    CHECK(act_right(delta, Gen::Cstar, w120).is_zero());
    CHECK(act_left(delta, Gen::B, w120).is_zero());
    CHECK(act_left(delta, Gen::C, w120).is_zero());
  }
  // the anti-involution is integer-exponent only
  CHECK_THROWS_AS(ModuleElement::basis(true, 0, 0, 0).star(),
                  std::invalid_argument);
}

TEST_CASE("defining relations hold as composed module actions",
          "[hopf][relations]") {
  for (int delta : {0, 1, 2}) {
    auto rep = verify_algebra_relations(delta, 4, 4, 4);
    auto [bad, first] = tally(rep);
    INFO("delta=" << delta << " first mismatch: " << first);
    CHECK(bad == 0);
    CHECK(rep.size() == 6525u);  // 225 monomials x (16 plain + 13 slice)
  }
}

TEST_CASE("two-term Casimir action matches the generator assembly",
          "[hopf][casimir]") {
  for (int delta : {0, 1, 2})
    for (bool slice : {false, true}) {
      int mismatches = 0;
      for (int m = 0; m <= 3; ++m)
        for (int k = -3; k <= 3; ++k)
          for (int n = 0; n <= 3; ++n) {
            ModuleElement w = ModuleElement::basis(slice, m, k, n);
            if (!(casimir_closed_form(delta, w) == casimir_assembled(delta, w)))
              ++mismatches;
          }
      INFO("delta=" << delta << " slice=" << slice);
      CHECK(mismatches == 0);
    }
}

TEST_CASE("Casimir scalar on the spectral slice", "[hopf][casimir]") {
  for (int delta : {0, 1, 2}) {
    ModuleElement vac = ModuleElement::basis(true, 0, 0, 0);
    ModuleElement want = casimir_slice_scalar() * vac;
    CHECK(casimir_closed_form(delta, vac) == want);
    CHECK(casimir_assembled(delta, vac) == want);
  }
  // numeric bridge: the slice scalar is minus the lattice eigenvalue
  for (double q : {0.3, 0.5, 0.8})
    for (double nu : {0.6, 1.1}) {
      QContext ctx(q, 1, 1.0, nu);
      cplx lhs = fs_eval(casimir_slice_scalar(), q, nu);
      cplx rhs = -toda_eigenvalue(ctx);
      CHECK_THAT(std::abs(lhs - rhs),
                 WithinAbs(0.0, 1e-13 * (std::abs(rhs) + 1.0)));
    }
}

TEST_CASE("principal-series operators: examples, relations, Casimir constancy",
          "[hopf][pi]") {
  for (int rn : {-2, 0, 1, 3}) {
    PiFunction one = pi_monomial(0);
    PiFunction a = pi_act_right(Gen::A, one, rn);
    REQUIRE(a.size() == 1u);
    CHECK(a.begin()->first == 0);
    CHECK(a.begin()->second == FormalScalar::monomial(rn - 1, 1));

    // constants die under the lowering operator; z maps to q^{(rn-2)/2} u
    CHECK(pi_act_right(Gen::B, one, rn).empty());
    PiFunction bz = pi_act_right(Gen::B, pi_monomial(1), rn);
    REQUIRE(bz.size() == 1u);
    CHECK(bz.begin()->first == 0);
    CHECK(bz.begin()->second == FormalScalar::monomial(rn - 2, 1));
  }

  // q-commutation through both one-sided families
  FormalScalar q1 = FormalScalar::monomial(2, 0);
  for (int rn : {-1, 0, 2})
    for (int p = -3; p <= 3; ++p) {
      PiFunction f = pi_monomial(p);
      {
        PiFunction lhs =
            pi_act_right(Gen::A, pi_act_right(Gen::B, f, rn), rn);
        PiFunction rhs =
            pi_act_right(Gen::B, pi_act_right(Gen::A, f, rn), rn);
        for (auto& [pp, c] : rhs) c = q1 * c;
        CHECK(pi_equal(lhs, rhs));
      }
      {
        PiFunction lhs =
            pi_act_left(Gen::Astar, pi_act_left(Gen::Bstar, f, rn), rn);
        PiFunction rhs =
            pi_act_left(Gen::Bstar, pi_act_left(Gen::Astar, f, rn), rn);
        for (auto& [pp, c] : rhs) c = q1 * c;
        CHECK(pi_equal(lhs, rhs));
      }
      {
        // [B,C] = (A^2 - D^2)/(q - q^{-1})
        PiFunction bc = pi_act_right(Gen::B, pi_act_right(Gen::C, f, rn), rn);
        PiFunction cb = pi_act_right(Gen::C, pi_act_right(Gen::B, f, rn), rn);
        PiFunction lhs = bc;
        for (const auto& [pp, c] : cb) pi_add(lhs, pp, -c);
        PiFunction a2 = pi_act_right(Gen::A, pi_act_right(Gen::A, f, rn), rn);
        PiFunction d2 =
            pi_act_right(Gen::Ainv, pi_act_right(Gen::Ainv, f, rn), rn);
        PiFunction rhs;
        FormalScalar inv = fs_inv_q_minus_qinv();
        for (const auto& [pp, c] : a2) pi_add(rhs, pp, inv * c);
        for (const auto& [pp, c] : d2) pi_add(rhs, pp, -(inv * c));
        CHECK(pi_equal(lhs, rhs));
      }
    }

  // the Casimir multiplies every Laurent power by the same scalar
  for (int rn = -3; rn <= 3; ++rn) {
    FormalScalar scal = pi_casimir_scalar(rn);
    int mismatches = 0;
    for (int p = -8; p <= 8; ++p) {
      PiFunction want;
      pi_add(want, p, scal);
      if (!pi_equal(pi_casimir_apply(pi_monomial(p), rn), want)) ++mismatches;
    }
    INFO("rep n=" << rn);
    CHECK(mismatches == 0);
  }
  CHECK(pi_casimir_scalar(0) == casimir_slice_scalar());
  CHECK(pi_casimir_scalar_star(2) == pi_casimir_scalar(-2));
}

TEST_CASE("normal ordering: base rules and the exchange relation",
          "[hopf][order]") {
  for (int delta : {0, 1, 2}) {
    CHECK(normal_order(delta, {Letter::Z, Letter::H}) ==
          FormalScalar::monomial(2 * delta, 0) *
              ModuleElement::basis(false, 0, 1, 1));
    CHECK(normal_order(delta, {Letter::H, Letter::Hinv}) ==
          ModuleElement::basis(false, 0, 0, 0));

    // z z* = q^{2 delta-2} z* z - q^{delta-2}(1-q^2) H^{-2}
    FormalScalar b;
    b.num[{2 * delta - 4, 0}] = 1;
    b.num[{2 * delta, 0}] = -1;
    ModuleElement want =
        FormalScalar::monomial(4 * delta - 4, 0) *
            ModuleElement::basis(false, 1, 0, 1) -
        b * ModuleElement::basis(false, 0, -2, 0);
    CHECK(normal_order(delta, {Letter::Z, Letter::Zs}) == want);
  }
}

TEST_CASE("normal ordering is confluent on every word up to length six",
          "[hopf][order][confluence]") {
  const std::vector<Letter> alphabet{Letter::Zs, Letter::H, Letter::Hinv,
                                     Letter::Z};
  for (int delta : {0, 1, 2}) {
    std::map<NWord, std::vector<ModuleElement>> memo;
    std::vector<NWord> level{NWord{}};
    int checked = 0, surprises = 0;
    for (int len = 1; len <= 6; ++len) {
      std::vector<NWord> next;
      next.reserve(level.size() * alphabet.size());
      for (const auto& w : level)
        for (Letter l : alphabet) {
          NWord e = w;
          e.push_back(l);
          next.push_back(std::move(e));
        }
      level = std::move(next);
      for (const auto& w : level) {
        auto outcomes = normal_order_all_paths(delta, w, &memo);
        if (outcomes.size() != 1u ||
            !(outcomes.front() == normal_order(delta, w)))
          ++surprises;
        ++checked;
      }
    }
    INFO("delta=" << delta);
    CHECK(surprises == 0);
    CHECK(checked == 4 + 16 + 64 + 256 + 1024 + 4096);
  }
}

TEST_CASE("twisted coproducts preserve the defining relations",
          "[hopf][coproduct]") {
  const std::vector<TwistParams> twists = {{0, 1}, {1, 1}, {2, 3}};
  for (int delta : {0, 1, 2})
    for (const auto& tw : twists) {
      auto rep = verify_coproduct(delta, tw, 1);
      auto [bad, first] = tally(rep);
      INFO("delta=" << delta << " twist=(" << tw.r << "," << tw.s
                    << ") first mismatch: " << first);
      CHECK(bad == 0);
      CHECK(rep.size() == 7u * 64u + 64u);
    }
}

TEST_CASE("antipode axiom on both sides for every generator",
          "[hopf][antipode]") {
  const std::vector<TwistParams> twists = {{0, 1}, {1, 1}, {2, 3}};
  for (int delta : {0, 1, 2})
    for (const auto& tw : twists) {
      auto rep = verify_antipode(delta, tw, 2);
      auto [bad, first] = tally(rep);
      INFO("delta=" << delta << " twist=(" << tw.r << "," << tw.s
                    << ") first mismatch: " << first);
      CHECK(bad == 0);
      CHECK(rep.size() == 8u * 27u * 2u);
    }
  // antipode is an anti-homomorphism on words
  auto [c, w] = antipode_word({Gen::A, Gen::B}, TwistParams{0, 1});
  CHECK(c == FormalScalar::monomial(-2, 0, -1));
  CHECK(w == Word{Gen::Astarinv, Gen::B, Gen::Ainv});
  CHECK(counit_word({Gen::A, Gen::Astar}) == 1);
  CHECK(counit_word({Gen::A, Gen::B}) == 0);
}

TEST_CASE("lattice Haar functional: positivity and mass", "[hopf][haar]") {
  double q = 0.5;
  HaarLegs legs = make_haar_legs(q, 0, 0, 0, false);
  double v = haar_value(q, legs);
  CHECK(v > 0.0);
  CHECK(std::isfinite(v));
  // undressed legs are nonnegative, so the absolute mass equals the value
  CHECK_THAT(haar_abs_mass(q, legs), WithinRel(v, 1e-12));
  // the guard window reweights the H-leg but keeps the mass positive and finite
  HaarLegs guarded = make_haar_legs(q, 0, 0, 0, true);
  double g = haar_value(q, guarded);
  CHECK(g > 0.0);
  CHECK(std::isfinite(g));
}

TEST_CASE("Haar invariance under the grading generators", "[hopf][haar]") {
  for (double q : {0.35, 0.5, 0.6})
    for (int delta : {0, 1, 2}) {
      HaarLegs legs = make_haar_legs(q, 0, 0, 0, false);
      CHECK(haar_invariance(q, delta, legs, Gen::A).residual < 1e-10);
      CHECK(haar_invariance(q, delta, legs, Gen::Astar).residual < 1e-10);
      // monomial-dressed test functions stay invariant
      HaarLegs dressed = make_haar_legs(q, 2, 0, 2, false);
      CHECK(haar_invariance(q, delta, dressed, Gen::A).residual < 1e-10);
      CHECK(haar_invariance(q, delta, dressed, Gen::Astar).residual < 1e-10);
    }
}

TEST_CASE("Haar kills the lowering generator", "[hopf][haar]") {
  for (double q : {0.35, 0.5}) {
    // sign-even legs cancel across the double cover exactly
    HaarLegs even = make_haar_legs(q, 0, 0, 0, false);
    CHECK(haar_invariance(q, 1, even, Gen::B).residual < 1e-15);
    // an odd z-dressing cancels by telescoping instead
    HaarLegs odd = make_haar_legs(q, 0, 0, 1, false);
    CHECK(haar_invariance(q, 1, odd, Gen::B).residual < 1e-10);
  }
}

TEST_CASE("Haar kills the raising generator on guarded legs", "[hopf][haar]") {
  for (double q : {0.35, 0.5})
    for (int delta : {0, 1, 2}) {
      HaarLegs even = make_haar_legs(q, 0, 0, 0, true);
      CHECK(haar_invariance(q, delta, even, Gen::C).residual < 1e-15);
      HaarLegs oddm = make_haar_legs(q, 1, 0, 0, true);
      CHECK(haar_invariance(q, delta, oddm, Gen::C).residual < 1e-10);
      // the guard keeps the grading invariances intact as well
      CHECK(haar_invariance(q, delta, even, Gen::A).residual < 1e-10);
      CHECK(haar_invariance(q, delta, even, Gen::Astar).residual < 1e-10);
    }
}

TEST_CASE("pairing unitarity chains hold with monomial dressing",
          "[hopf][unitarity]") {
  for (Gen g : {Gen::A, Gen::B, Gen::C})
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 4; ++b) {
        INFO("generator " << static_cast<int>(g) << " degrees (" << a << ","
                          << b << ")");
        CHECK(unitarity_chain_holds(g, a, b));
      }

  // canonicalization: T(0,-1,0) = q T(1,0,0), and only with that power
  MomentSum m1, m2, m3;
  m1.add(0, -1, 0, FormalScalar::one());
  m2.add(1, 0, 0, FormalScalar::monomial(2, 0));
  m3.add(1, 0, 0, FormalScalar::one());
  CHECK(m1 == m2);
  CHECK(!(m1 == m3));

  // negative control: one stray q-power on the reflected side breaks the
  // lowering chain
  FormalScalar inv;
  inv.num[{0, 0}] = 1;
  inv.den_pow = 1;
  FormalScalar c = FormalScalar::monomial(2, -1) * inv;
  FormalScalar d = FormalScalar::monomial(4, -1) * inv;
  MomentSum lhs, rhs;
  lhs.add(0, -1, -1, c);
  lhs.add(0, 1, -1, -c);
  rhs.add(-1, 0, -1, -d);
  rhs.add(1, 0, -1, d);
  CHECK(!(lhs == rhs));
}
