#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "qctrl/constants.hpp"
#include "qctrl/control.hpp"
#include "qctrl/pwpoly.hpp"

using namespace qctrl;

namespace {
PwPoly ramp_signal() {
  // u(t) = 1 + t/2 on [0, 0.5]; exact as a piecewise-linear interpolant.
  std::vector<double> g, v;
  for (int i = 0; i <= 64; ++i) {
    g.push_back(0.5 * i / 64.0);
    v.push_back(1.0 + 0.5 * g.back());
  }
  return PwPoly::from_samples(g, v);
}
}  // namespace

TEST_CASE("piecewise polynomial evaluation, calculus, algebra") {
  PwPoly u = ramp_signal();
  CHECK(u(0.3) == doctest::Approx(1.15).epsilon(1e-15));
  CHECK(u.integral() == doctest::Approx(0.5 + 0.25 * 0.25).epsilon(1e-14));

  PwPoly U = u.antiderivative();
  CHECK(U(0.0) == doctest::Approx(0.0));
  CHECK(U(0.5) == doctest::Approx(u.integral()).epsilon(1e-14));
  CHECK(U(0.2) == doctest::Approx(0.2 + 0.25 * 0.04).epsilon(1e-13));
  PwPoly du = U.derivative();
  CHECK(du(0.37) == doctest::Approx(u(0.37)).epsilon(1e-12));

  // product against closed form: (1 + t/2)^2 integrates to 49/48 on [0,1/2]
  PwPoly sq = u.times(u);
  CHECK(sq.integral() == doctest::Approx(u.l2_inner(u)).epsilon(1e-14));
  CHECK(sq.integral() == doctest::Approx((std::pow(1.25, 3) - 1.0) * 2.0 / 3.0).epsilon(1e-13));

  // mismatched grids get merged exactly
  std::vector<double> g2{0.0, 0.17, 0.5};
  std::vector<double> v2{2.0, 2.0, 2.0};
  PwPoly c2 = PwPoly::from_samples(g2, v2);
  PwPoly s = u.plus(c2);
  CHECK(s(0.3) == doctest::Approx(3.15).epsilon(1e-14));
  PwPoly pr = u.times(c2);
  CHECK(pr.integral() == doctest::Approx(2.0 * u.integral()).epsilon(1e-14));

  PwPoly tt = u.times_t();
  CHECK(tt(0.4) == doctest::Approx(0.4 * u(0.4)).epsilon(1e-13));

  // re-expansion on a refined grid changes nothing
  PwPoly r = u.refined_for_frequency(5000.0);
  CHECK(r.cells() > u.cells());
  CHECK(r(0.123) == doctest::Approx(u(0.123)).epsilon(1e-13));
  CHECK(r.integral() == doctest::Approx(u.integral()).epsilon(1e-13));

  PwPoly left = PwPoly::constant(0.0, 1.0, 2.0);
  PwPoly right = PwPoly::constant(1.0, 1.5, -1.0);
  PwPoly j = PwPoly::join(left, right);
  CHECK(j(0.5) == doctest::Approx(2.0));
  CHECK(j(1.2) == doctest::Approx(-1.0));
  CHECK(j.integral() == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("oscillatory moments match reference and closed forms") {
  PwPoly u = ramp_signal();
  double a = 8.0 * kPi * kPi;
  cplx S1 = u.moment(a);
  CHECK(std::abs(S1 - cplx(0.015391729637568944, 0.016020750105314362)) < 1e-15);

  CHECK(std::abs(u.moment(0.0) - cplx(u.integral(), 0.0)) < 1e-15);

  // very high frequency against the exact primitive of a constant
  PwPoly one = PwPoly::constant(0.0, 1.0, 1.0);
  double w = 8872.3;
  cplx closed = (std::exp(cplx(0.0, w)) - 1.0) / cplx(0.0, w);
  CHECK(std::abs(one.moment(w) - closed) < 1e-14);

  // moment is grid-invariant
  PwPoly r = u.refined_for_frequency(a);
  CHECK(std::abs(r.moment(a) - S1) < 1e-15);
}

TEST_CASE("ordered double integral: reference value and exchange identity") {
  PwPoly u = ramp_signal();
  double a = 8.0 * kPi * kPi, b = -3.0 * kPi * kPi;
  cplx J = ordered_double(u, u, a, b);
  CHECK(std::abs(J - cplx(0.0008080016158493484, -0.0010022128030376842)) < 1e-15);

  // D(a,b) + D(b,a) = S(a) S(b) for the same amplitude
  for (auto [aa, bb] : std::vector<std::pair<double, double>>{
           {0.0, 0.0}, {8872.0, -2955.5}, {17.0, 123.456}, {-8872.0, 8872.0}}) {
    cplx lhs = ordered_double(u, u, aa, bb) + ordered_double(u, u, bb, aa);
    cplx rhs = u.moment(aa) * u.moment(bb);
    CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("ordered triple integral: permutation identity and cube identity") {
  // three distinct amplitudes on one grid
  std::vector<double> g, vu, vv, vw;
  for (int i = 0; i <= 96; ++i) {
    double t = 0.4 * i / 96.0;
    g.push_back(t);
    vu.push_back(1.0 + 0.5 * t);
    vv.push_back(0.3 - t);
    vw.push_back(2.0 * t);
  }
  PwPoly u = PwPoly::from_samples(g, vu);
  PwPoly v = PwPoly::from_samples(g, vv);
  PwPoly w = PwPoly::from_samples(g, vw);
  double a = 250.3, b = -77.7, c = 1234.5;

  struct Slot {
    const PwPoly* f;
    double w;
  };
  Slot slots[3] = {{&u, a}, {&v, b}, {&w, c}};
  int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  cplx sum(0.0, 0.0);
  for (auto& pm : perm) {
    sum += ordered_triple(*slots[pm[0]].f, *slots[pm[1]].f, *slots[pm[2]].f, slots[pm[0]].w,
                          slots[pm[1]].w, slots[pm[2]].w);
  }
  cplx rhs = u.moment(a) * v.moment(b) * w.moment(c);
  CHECK(std::abs(sum - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));

  // int over the ordered simplex of u(t)u(s)u(r) = (int u)^3 / 6
  cplx cube = ordered_triple(u, u, u, 0.0, 0.0, 0.0);
  CHECK(std::abs(cube - std::pow(u.integral(), 3) / 6.0) < 1e-14);
}

TEST_CASE("control primitives and weak norms") {
  ControlSignal s = ControlSignal::from_function(0.0, 0.5, 128, [](double t) { return 1.0 + 0.5 * t; });
  const PwPoly& u1 = s.primitive(1);
  const PwPoly& u2 = s.primitive(2);
  CHECK(u1(0.5) == doctest::Approx(0.5625).epsilon(1e-13));
  CHECK(u2(0.5) == doctest::Approx(0.25 / 2.0 + 0.125 / 12.0).epsilon(1e-12));
  CHECK(s.weak_norm(1) == doctest::Approx(std::abs(u1(0.5)) + u1.l2_norm()).epsilon(1e-14));
}

TEST_CASE("pulse profile normalizers match high-precision references") {
  CHECK(profile_gain_first() == doctest::Approx(0.039957913354848353).epsilon(1e-12));
  CHECK(profile_gain_second() == doctest::Approx(3.8598108600220131).epsilon(1e-12));
  double n0 = profile_norm(0, 2.0);
  CHECK(n0 * n0 == doctest::Approx(0.00078166546127890753).epsilon(1e-12));
  CHECK(profile_norm(0, 1.0) == doctest::Approx(0.017933307177392064).epsilon(1e-12));
  CHECK(std::abs(profile_norm(0, std::numeric_limits<double>::infinity()) - 0.059) < 2e-3);
}

TEST_CASE("pulse scaling norms: analytic and sampled paths agree") {
  Pulse p{2.0, 0.1, 0.25, 3};
  ControlSignal s = ControlSignal::pulse(p, 2048);
  double inf = std::numeric_limits<double>::infinity();

  // k = 0, L2: direct piecewise value vs profile scaling
  double direct = s.u().l2_norm();
  double analytic = s.seminorm(0, 2.0);
  CHECK(direct == doctest::Approx(analytic).epsilon(1e-8));

  // primitives: u_3 is the width^3-scaled profile itself
  double d3 = s.primitive(3).l2_norm();
  CHECK(d3 == doctest::Approx(s.seminorm(-3, 2.0)).epsilon(1e-8));

  // u_1 vanishes at the end of the support for derivative pulses
  CHECK(std::abs(s.primitive(1)(s.t_end())) < 1e-12);
  CHECK(s.weak_norm(3) == doctest::Approx(d3).epsilon(1e-7));

  // sup norm: sampled maximum tracks the profile maximum
  double sup_analytic = s.seminorm(0, inf);
  double sup_direct = s.u().sup_norm();
  CHECK(std::abs(sup_direct - sup_analytic) < 1e-4 * sup_analytic);

  // first derivative eats one width factor
  CHECK(s.seminorm(1, 2.0) ==
        doctest::Approx(2.0 * std::pow(0.25, -1.0 + 0.5) * profile_norm(4, 2.0)).epsilon(1e-12));
}
