#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "qctrl/control.hpp"
#include "qctrl/dipole.hpp"
#include "qctrl/kernels.hpp"
#include "qctrl/simulate.hpp"

using namespace qctrl;

namespace {

DipoleProfile cosine_profile() {  // cos(2 pi x), steering mode 3
  DipoleProfile mu;
  mu.N = 30;
  mu.trig = {{2, 1.0}};
  return mu;
}

DipoleProfile mix_profile() {  // cos(2 pi x) + 0.3 cos(6 pi x), steering mode 3
  DipoleProfile mu;
  mu.N = 30;
  mu.trig = {{2, 1.0}, {6, 0.3}};
  return mu;
}

DipoleProfile bump_profile() {  // single interior bump on (0.3, 0.5), steering mode 2
  DipoleProfile mu;
  mu.N = 30;
  mu.atoms.push_back({DipoleAtom::Kind::interior, 0.3, 0.2, 1.0, {1.0}});
  return mu;
}

// Dense symmetric five-level system with an irregular spectrum; exercises the
// generic-eigenvalue code paths that the sine-basis profiles cannot reach.
GalerkinOperator dense_five_level() {
  Vec lambda(5);
  lambda << 1.0, 2.3, 4.1, 7.7, 9.4;
  Mat M(5, 5);
  M << 0.3, 1.0, -0.4, 0.2, 0.7,  //
      1.0, -0.2, 0.8, -0.5, 0.1,  //
      -0.4, 0.8, 0.5, 0.9, -0.3,  //
      0.2, -0.5, 0.9, -0.1, 0.6,  //
      0.7, 0.1, -0.3, 0.6, 0.4;
  return GalerkinOperator::from_operators(lambda, M);
}

double magnitude(cplx z) { return std::abs(z); }

}  // namespace

TEST_CASE("zero control: every kernel functional vanishes") {
  KernelSet ks(mix_profile(), 3);
  ControlSignal u = ControlSignal::zero(0.0, 1.0);
  CHECK(magnitude(quad_term_direct(ks, u)) == 0.0);
  CHECK(magnitude(quad_term_ipp(ks, u)) == 0.0);
  CHECK(magnitude(cubic_term_kernels(ks, u)) == 0.0);
  CHECK(magnitude(heuristic_leading(u, 2.0, 3.0)) == 0.0);
  CHECK(non_overlap_delta(u, 0.5) == 0.0);
}

TEST_CASE("kernel-set drift coefficients match the series route") {
  DipoleProfile mu = bump_profile();
  DriftCoefficients d = drift_coefficients(mu, 2);
  KernelSet ks(mu, 2);
  CHECK(std::abs(ks.a1() - d.a1) <= 1e-13 * std::abs(d.a1));
  CHECK(std::abs(ks.a2() - d.a2) <= 1e-13 * std::abs(d.a2));
  CHECK(std::abs(ks.a3() - d.a3) <= 1e-13 * std::abs(d.a3));
  CHECK(std::abs(ks.a1() - 0.011465418145239984) <= 1e-10 * 0.011465418145239984);
}

TEST_CASE("difference of the cubic kernels at the origin is the cubic drift coefficient") {
  // With quadrature slope entries the two single-sum kernels collapse at the
  // origin onto the two halves of the cubic obstruction series.
  DipoleProfile mu = bump_profile();
  DriftCoefficients d = drift_coefficients(mu, 2);
  KernelSet ks(mu, 2, SlopeEntries::quadrature);
  cplx diff = ks.cubic1(0.0, 0.0) - ks.cubic2(0.0, 0.0);
  CHECK(std::abs(diff.imag()) < 1e-12);
  CHECK(std::abs(diff.real() - d.c) <= 1e-12 * std::abs(d.c));
  CHECK(std::abs(diff.real() - 0.028631807091645797) <= 1e-9 * 0.028631807091645797);

  DipoleProfile cosine = cosine_profile();
  DriftCoefficients dc = drift_coefficients(cosine, 3);
  KernelSet kc(cosine, 3, SlopeEntries::quadrature);
  cplx diffc = kc.cubic1(0.0, 0.0) - kc.cubic2(0.0, 0.0);
  CHECK(std::abs(diffc.real() - dc.c) <= 1e-12 * std::abs(dc.c));
  CHECK(std::abs(diffc.real() - 8.0 * std::pow(kPi, 4)) <= 1e-10 * 8.0 * std::pow(kPi, 4));
}

TEST_CASE("half-derivative diagonal identity reproduces the obstruction coefficients") {
  // (d/dt)/2 of the (p-2, p-2) partial on the diagonal, minus the (p-1, p-2)
  // partial, equals -i a_p e^{i gap t}: the exact mechanism by which repeated
  // integration by parts trades kernel derivatives for moment terms.
  DipoleProfile mu = bump_profile();
  KernelSet ks(mu, 2);
  const double w = ks.gap();
  for (double t : {0.0, 0.137, 0.29}) {
    cplx f2 = 0.5 * (ks.quad_partial(0, 1, t, t) - ks.quad_partial(1, 0, t, t));
    cplx want2 = -kI * ks.a2() * std::exp(kI * (w * t));
    CHECK(std::abs(f2 - want2) <= 1e-11 * std::abs(ks.a2()));
    cplx f3 = 0.5 * (ks.quad_partial(1, 2, t, t) - ks.quad_partial(2, 1, t, t));
    cplx want3 = -kI * ks.a3() * std::exp(kI * (w * t));
    CHECK(std::abs(f3 - want3) <= 1e-11 * std::abs(ks.a3()));
  }
}

TEST_CASE("triple oracle: direct, integrated-by-parts, and cascade quadratic terms agree") {
  ControlSignal ca = ControlSignal::pulse({0.8, 0.05, 0.4, 3});
  ControlSignal cb = ControlSignal::concat(ControlSignal::pulse({0.8, 0.05, 0.4, 3}),
                                           ControlSignal::pulse({-0.5, 0.45, 0.3, 2}));
  // Fourth-derivative shapes have large sup norms; keep the amplitude small so
  // u1^2 |S| stays within the explicit stepper's stability budget.
  ControlSignal cc = ControlSignal::pulse({0.05, 0.0, 0.5, 4});

  struct Setup {
    DipoleProfile mu;
    int modes[2];
  };
  for (const Setup& st : {Setup{bump_profile(), {2, 5}}, Setup{mix_profile(), {3, 7}}}) {
    GalerkinOperator op = GalerkinOperator::build(st.mu);
    for (const ControlSignal& u : {ca, cb, cc}) {
      const double un = u.primitive(1).l2_norm();
      const double tol = 1e-8 * (1.0 + un * un);
      AuxCascadeState aux = evolve_aux_cascade(op, u, u.t_begin(), u.t_end());
      for (int j : st.modes) {
        KernelSet ks(op, j, SlopeEntries::commutator, &st.mu);
        cplx direct = quad_term_direct(ks, u);
        cplx ipp = quad_term_ipp(ks, u);
        cplx cascade = aux.second(j - 1);
        CHECK(std::abs(direct - ipp) <= tol);
        CHECK(std::abs(direct - cascade) <= tol);
        CHECK(std::abs(ipp - cascade) <= tol);
      }
    }
  }
}

TEST_CASE("cubic kernel functional reproduces the integrated third layer") {
  ControlSignal u = ControlSignal::pulse({0.9, 0.0, 0.4, 3});

  DipoleProfile mix = mix_profile();
  mix.N = 12;
  GalerkinOperator opm = GalerkinOperator::build(mix);
  AuxCascadeState auxm = evolve_aux_cascade(opm, u, u.t_begin(), u.t_end());
  for (int j : {3, 5}) {
    KernelSet ks(opm, j);
    cplx kern = cubic_term_kernels(ks, u);
    CHECK(std::abs(kern - auxm.third(j - 1)) <= 1e-9 * (1.0 + std::abs(auxm.third(j - 1))));
  }

  DipoleProfile bump = bump_profile();
  bump.N = 12;
  GalerkinOperator opb = GalerkinOperator::build(bump);
  AuxCascadeState auxb = evolve_aux_cascade(opb, u, u.t_begin(), u.t_end());
  KernelSet kb(opb, 2);
  cplx kern = cubic_term_kernels(kb, u);
  CHECK(std::abs(kern - auxb.third(1)) <= 1e-9 * (1.0 + std::abs(auxb.third(1))));
}

TEST_CASE("generic-spectrum kernel set matches the cascade on a dense five-level system") {
  GalerkinOperator op = dense_five_level();
  ControlSignal u = ControlSignal::pulse({0.7, 0.0, 1.0, 2});
  AuxCascadeState aux = evolve_aux_cascade(op, u, 0.0, 1.0);
  for (int j : {2, 4}) {
    KernelSet ks(op, j);
    cplx direct = quad_term_direct(ks, u);
    cplx ipp = quad_term_ipp(ks, u);
    CHECK(std::abs(direct - ipp) <= 1e-10);
    CHECK(std::abs(direct - aux.second(j - 1)) <= 1e-9);
    cplx kern = cubic_term_kernels(ks, u);
    CHECK(std::abs(kern - aux.third(j - 1)) <= 1e-9);
  }
}

TEST_CASE("tabulated evaluation cross-checks the oscillatory engine") {
  GalerkinOperator op = dense_five_level();
  KernelSet ks(op, 2);
  ControlSignal u = ControlSignal::pulse({0.7, 0.0, 1.0, 2});
  cplx engine = quad_term_direct(ks, u);
  cplx table = quad_term_direct_tabulated(ks, u, 256, 2048);
  CHECK(std::abs(engine - table) <= 1e-6 * (1.0 + std::abs(engine)));
}

TEST_CASE("parallel and serial reductions are bit-identical") {
  KernelSet ks(mix_profile(), 3);
  ControlSignal u = ControlSignal::pulse({0.8, 0.05, 0.4, 3});
  cplx qp = quad_term_direct(ks, u, true);
  cplx qs = quad_term_direct(ks, u, false);
  CHECK(qp == qs);

  DipoleProfile mix = mix_profile();
  mix.N = 12;
  KernelSet k12(mix, 3);
  cplx cp = cubic_term_kernels(k12, u, true);
  cplx cs = cubic_term_kernels(k12, u, false);
  CHECK(cp == cs);
}

TEST_CASE("kernel values are stable under truncation growth") {
  // Banded profile: the series terminates inside the truncation, so growing
  // the mode count changes nothing at all.
  DipoleProfile small = mix_profile();
  small.N = 12;
  KernelSet k12(small, 3);
  KernelSet k30(mix_profile(), 3);
  for (double t : {0.0, 0.21})
    for (double s : {0.07, 0.33}) CHECK(std::abs(k12.quad(t, s) - k30.quad(t, s)) == 0.0);

  // Smooth atom: the change from enlarging the truncation is bounded by the
  // envelope of the dropped terms, computable from the coupling rows alone.
  DipoleProfile bump = bump_profile();
  DipoleProfile bump24 = bump;
  bump24.N = 24;
  KernelSet b30(bump, 2);
  KernelSet b24(bump24, 2);
  Vec c1 = coeff_row(bump, 1), c2 = coeff_row(bump, 2);
  double envelope = 0.0;
  for (int n = 25; n <= 30; ++n) {
    double ln = eigenvalue(n);
    envelope += std::abs((eigenvalue(1) - ln) * (ln - eigenvalue(2)) * c1(n - 1) * c2(n - 1));
  }
  double scale = 0.0, gap_max = 0.0;
  for (double t : {0.0, 0.13, 0.27})
    for (double s : {0.05, 0.19, 0.31}) {
      scale = std::max(scale, std::abs(b30.quad(t, s)));
      gap_max = std::max(gap_max, std::abs(b30.quad(t, s) - b24.quad(t, s)));
    }
  CHECK(gap_max <= envelope);
  CHECK(envelope < 0.05 * scale);
}

TEST_CASE("leading heuristic: closed pulse values and parity under negation") {
  const double amp = 0.8, w = 0.4, a3 = 2.5, c = 4.0;
  ControlSignal u = ControlSignal::pulse({amp, 0.1, w, 3});
  // u1 = amp w P'', u2 = amp w^2 P', u3 = amp w^3 P for the pulse shape P, so
  // both integrals reduce to the frozen shape gains.
  const double cubic_int = amp * amp * amp * std::pow(w, 5) * profile_gain_second();
  const double p0 = profile_norm(0, 2.0);
  const double quad_int = amp * amp * std::pow(w, 7) * p0 * p0;
  cplx h = heuristic_leading(u, a3, c);
  CHECK(h.real() == 0.0);
  CHECK(std::abs(h.imag() - (c * cubic_int - a3 * quad_int)) <=
        1e-8 * (std::abs(c * cubic_int) + std::abs(a3 * quad_int)));

  // Negating the control flips the cubic part and keeps the quadratic part.
  cplx hm = heuristic_leading(u.scaled(-1.0), a3, c);
  CHECK(std::abs((h + hm) - cplx(0.0, -2.0 * a3 * quad_int)) <= 1e-8 * a3 * quad_int);
  CHECK(std::abs((h - hm) - cplx(0.0, 2.0 * c * cubic_int)) <= 1e-8 * std::abs(c) * cubic_int);
}

TEST_CASE("non-overlap estimate: assembled value matches analytic pulse norms") {
  ControlSignal a = ControlSignal::pulse({0.9, 0.0, 0.3, 3});
  ControlSignal b = ControlSignal::pulse({-0.6, 0.3, 0.3, 3});
  ControlSignal u =
      ControlSignal::concat(ControlSignal::concat(a, b), ControlSignal::zero(0.6, 1.0));

  // Pulse primitives all vanish where the pulses end, so u1, u2, u3 of the
  // concatenation restrict to per-pulse pieces and every norm splits.
  auto l2sq = [](const ControlSignal& p, int k) {
    double v = p.seminorm(-k, 2.0);
    return v * v;
  };
  const double l1u1 = a.seminorm(-1, 1.0) + b.seminorm(-1, 1.0);
  const double l2u1sq = l2sq(a, 1) + l2sq(b, 1);
  const double expected = (l2sq(a, 3) + l2sq(b, 3))                          // |u3|_2^2
                          + l2u1sq * (a.seminorm(-2, 1.0) + b.seminorm(-2, 1.0))  // |u1|^2 |u2|_1
                          + l1u1 * l1u1 * l1u1                               // |u1|_1^3
                          + l2sq(b, 1) * l1u1          // window [0.3, 1]: only b survives
                          + b.seminorm(-2, INFINITY) * l2u1sq;
  // Both routes integrate |u_k| through its corner points numerically, so
  // they agree to quadrature accuracy, not machine precision.
  const double got = non_overlap_delta(u, 0.3);
  CHECK(got == doctest::Approx(expected).epsilon(1e-4));

  // Window boundary in the middle of a pulse: primitives do not vanish there.
  CHECK_THROWS_AS(non_overlap_delta(u, 0.15), std::invalid_argument);
}

TEST_CASE("ill-prepared controls are rejected by the integrated form") {
  KernelSet ks(mix_profile(), 3);
  ControlSignal u = ControlSignal::from_function(
      0.0, 1.0, 256, [](double t) { return std::sin(2.0 * kPi * t); });
  CHECK_THROWS_AS(quad_term_ipp(ks, u), std::invalid_argument);
}
