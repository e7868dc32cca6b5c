#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qctrl/kernels.hpp"
#include "qctrl/toys.hpp"

using namespace qctrl;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return g;
}

}  // namespace

TEST_CASE("oscillating families: normalization, support, boundary jets") {
  // second-order family (toy gain 1): int u1^2 u2 = b exactly by construction
  for (double b : {1e-3, -2.5e-4}) {
    ControlSignal u = oscillating_control_toy(b);
    CHECK(u.t_begin() == 0.0);
    CHECK(u.duration() == doctest::Approx(std::pow(std::abs(b), 4.0 / 41.0)).epsilon(1e-14));
    const PwPoly& u1 = u.primitive(1);
    const PwPoly& u2 = u.primitive(2);
    double gain = u1.times(u1).times(u2).integral();
    CHECK(std::abs(gain - b) <= 1e-11 * std::abs(b));
    // the pulse derivative order leaves the first three primitives at zero
    double amp = std::abs(u.pulse_spec().amp);
    CHECK(std::abs(u1(u.t_end())) <= 1e-11 * amp);
    CHECK(std::abs(u2(u.t_end())) <= 1e-11 * amp);
    CHECK(std::abs(u.primitive(3)(u.t_end())) <= 1e-11 * amp);
  }
  // first-order family: int u1^3 = b
  for (double b : {1e-2, -3e-5}) {
    ControlSignal u = oscillating_control_sussmann(b);
    const PwPoly& u1 = u.primitive(1);
    double gain = u1.times(u1).times(u1).integral();
    CHECK(std::abs(gain - b) <= 1e-11 * std::abs(b));
    CHECK(u.duration() == doctest::Approx(std::pow(std::abs(b), 2.0 / 11.0)).epsilon(1e-14));
  }
  // drift-constant normalization: int u1^2 u2 = b / C, so a cubic coefficient
  // C in front of the integral produces exactly b
  {
    double C = -0.096386248047588857;
    double b = 4e-4;
    ControlSignal u = oscillating_control_pde(b, C);
    const PwPoly& u1 = u.primitive(1);
    const PwPoly& u2 = u.primitive(2);
    double gain = u1.times(u1).times(u2).integral();
    CHECK(std::abs(gain - b / C) <= 1e-11 * std::abs(b / C));
    CHECK_THROWS_AS(oscillating_control_pde(b, 0.0), std::invalid_argument);
  }
  // b = 0 extends the family continuously by the zero signal
  CHECK(oscillating_control_toy(0.0).u().sup_norm() == 0.0);
  // families shrink in H^2 as b -> 0: |u_b|_{H^2} = scale |b|^{1/41} |phi^(5)|_{L2}
  {
    double h1 = oscillating_control_toy(1e-3).seminorm(2, 2.0);
    double h2 = oscillating_control_toy(1e-5).seminorm(2, 2.0);
    CHECK(h2 < h1);
    CHECK(h2 / h1 == doctest::Approx(std::pow(1e-2, 1.0 / 41.0)).epsilon(1e-10));
    double scale = std::cbrt(1.0 / profile_gain_second());
    CHECK(h1 == doctest::Approx(scale * std::pow(1e-3, 1.0 / 41.0) * profile_norm(5, 2.0))
                    .epsilon(1e-12));
  }
}

TEST_CASE("drift chains: closed forms for the constant control") {
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  ControlSignal one(PwPoly::constant(0.0, 1.0, 1.0));

  // x2(1) = int t^2 + t^3 = 1/3 + 1/4
  double x2 = toy_final(ToyModel::drift_direct, one, opt)[1];
  CHECK(x2 == doctest::Approx(7.0 / 12.0).epsilon(1e-10));
  CHECK(std::abs(tm1_quadrature(one) - 7.0 / 12.0) <= 1e-14);

  // x3(1) = int (t^2/2)^2 + t^3 = 1/20 + 1/4
  double x3 = toy_final(ToyModel::drift_integrated, one, opt)[2];
  CHECK(x3 == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(std::abs(sussmann_quadrature(one) - 0.3) <= 1e-14);

  // x4(1) = int (t^3/6)^2 + t^2 (t^2/2) = 1/252 + 1/10,
  // x5(1) = int (1-t)(...) = 1/2016 + 1/60
  Vec x = toy_final(ToyModel::drift_competing, one, opt);
  CHECK(x[3] == doctest::Approx(0.10396825396825397).epsilon(1e-10));
  CHECK(x[4] == doctest::Approx(0.017162698412698412).epsilon(1e-10));
  auto [q4, q5] = tm3_quadrature(one);
  CHECK(std::abs(q4 - 0.10396825396825397) <= 1e-14);
  CHECK(std::abs(q5 - 0.017162698412698412) <= 1e-14);
  CHECK(std::abs(x[3] - q4) <= 1e-12);
  CHECK(std::abs(x[4] - q5) <= 1e-12);
}

TEST_CASE("first-order drift obstruction: x2 > 0 for every small control") {
  auto samples = tm1_drift_experiment(12345, 100);
  REQUIRE(samples.size() == 100);
  for (const auto& s : samples) {
    CHECK(s.drift_value > 0.0);
    CHECK(s.margin > 0.0);  // x2 >= 0.7 int u1^2, strict for nonzero u
    CHECK(s.quadrature_gap <= 1e-12);
  }
  double min_margin = 1e300;
  for (const auto& s : samples) min_margin = std::min(min_margin, s.margin);
  CHECK(min_margin > 1e-6);
}

TEST_CASE("integrated drift inequality: x3 >= 1/2 int u2^2 in the W^{1,oo} ball") {
  auto samples = sussmann_inequality_experiment(67890, 100, 0.45);
  REQUIRE(samples.size() == 100);
  for (const auto& s : samples) {
    CHECK(s.margin > 0.0);
    CHECK(s.margin >= 0.01 * s.comparator);  // strictly above the bound
    CHECK(s.quadrature_gap <= 1e-12);
  }
  CHECK_THROWS_AS(sussmann_inequality_experiment(1, 1, 0.75), std::invalid_argument);
}

TEST_CASE("first-order recovery: x3 = b + O(|b|^{12/11})") {
  RecoverySweep sweep = sussmann_recovery_sweep(log_grid(3e-6, 1e-2, 8));
  CHECK(sweep.fit.slope >= 12.0 / 11.0 - 0.03);
  CHECK(sweep.fit.slope <= 12.0 / 11.0 + 0.03);
  CHECK(sweep.fit.r2 > 0.9999);
  // the residual is exactly scale^2 |b|^{12/11} int profile^2 with
  // scale = (int profile'^3)^{-1/3}
  double coef = std::pow(profile_gain_first(), -2.0 / 3.0) * 0.00078166546127890753;
  for (const auto& p : sweep.points) {
    CHECK(p.residual / (coef * std::pow(p.b, 12.0 / 11.0)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.final_value > p.b);  // the deviation is the positive drift term
  }
  // sign symmetry: the drift deviation is even in b
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  double up = toy_final(ToyModel::drift_integrated, oscillating_control_sussmann(1e-4), opt)[2];
  double dn = toy_final(ToyModel::drift_integrated, oscillating_control_sussmann(-1e-4), opt)[2];
  CHECK(std::abs((up - 1e-4) - (dn + 1e-4)) <= 1e-14);
}

TEST_CASE("competing drift: two-pulse endpoint decomposition") {
  auto grid = log_grid(1e-6, 1e-2, 7);
  const double T = 1.0;

  CompositeSweep ray = tm3_composite_sweep(T, grid, 0.6);
  CHECK(ray.fit.slope >= 1.0 + 1.0 / 41.0 - 0.03);
  CHECK(ray.fit.slope <= 1.0 + 4.0 / 41.0 + 0.02);  // width-linear deviation
  CHECK(ray.fit.r2 > 0.999);
  for (const auto& p : ray.points) {
    CHECK(p.chain_leak <= 1e-11);  // x1 = x2 = x3 = 0 after each pulse
    double target = std::abs(p.b + p.c) + std::abs((p.b + p.c) * T + 2.0 * T * p.b);
    CHECK(p.residual <= 0.15 * target);
  }

  // c = -b cancels the e4 motion: pure displacement along e5 of size 2 T b
  CompositeSweep anti = tm3_composite_sweep(T, grid, -1.0);
  CHECK(anti.fit.slope >= 1.0 + 1.0 / 41.0 - 0.03);
  CHECK(anti.fit.r2 > 0.999);
  for (const auto& p : anti.points) {
    CHECK(std::abs(p.x4) <= 1e-2 * std::abs(p.x5));
    CHECK(p.x5 == doctest::Approx(2.0 * T * p.b).epsilon(1e-2));
    CHECK(p.chain_leak <= 1e-11);
  }

  // pulses must fit inside one segment
  CHECK_THROWS_AS(tm3_composite_sweep(0.05, {1e-2}, 1.0), std::invalid_argument);
}

TEST_CASE("five-level bilinear instance satisfies the drift hypotheses") {
  BilinearInstance inst = make_bilinear_instance();

  // lost direction: no direct coupling, every other mode coupled
  CHECK(inst.coupling(0, 1) == 0.0);
  for (int j : {0, 2, 3, 4}) CHECK(std::abs(inst.coupling(0, j)) >= 0.25);

  // quadratic series: first two cancel exactly (dyadic null-space data),
  // third is the frozen exact value
  CHECK(std::abs(inst.a1) <= 1e-15);
  CHECK(std::abs(inst.a2) <= 1e-15);
  CHECK(inst.a3 == doctest::Approx(1.41632080078125).epsilon(1e-14));

  // cubic bracket obstruction removed by the affine solve on the 4-5 edge
  CHECK(std::abs(inst.ad3_entry) <= 1e-14);
  CHECK(inst.coupling(3, 4) == doctest::Approx(0.34294590643274847).epsilon(1e-12));

  // cubic kernel constant stays away from zero
  CHECK(inst.cubic_constant == doctest::Approx(-0.096386248047588857).epsilon(1e-12));

  // sanity of the operator payload
  GalerkinOperator op = inst.op();
  CHECK(op.N == 5);
  for (int j = 1; j < 5; ++j) CHECK(op.lambda[j] > op.lambda[j - 1]);

  // free evolution is the identity on rotating coordinates
  SimOptions opt;
  CVec ground = CVec::Zero(5);
  ground[0] = 1.0;
  CVec free_end = evolve(op, ControlSignal::zero(0.0, 1.0), ground, 0.0, 1.0, opt);
  CHECK((free_end - ground).norm() <= 1e-12);

  // norm conservation under a strong pulse
  ControlSignal u = oscillating_control_pde(1e-3, inst.cubic_constant);
  CVec end = evolve(op, u, ground, 0.0, u.t_end(), opt);
  CHECK(std::abs(end.norm() - 1.0) <= 1e-10);
}

TEST_CASE("bilinear instance: linear layer matches the moment formula") {
  BilinearInstance inst = make_bilinear_instance();
  GalerkinOperator op = inst.op();
  std::mt19937_64 rng(424242);
  ControlSignal u = random_windowed_control(rng, 4).scaled(1e-3);

  CascadeState cas = evolve_cascade(op, u, 0.0, 1.0);
  CVec moments = linear_term_moments(op, u);
  CHECK((cas.first - moments).norm() <= 1e-9);

  // nonlinear remainder behind the linear layer is quadratically small
  CVec ground = CVec::Zero(5);
  ground[0] = 1.0;
  double l1 = u.u().lp_norm(1.0);
  CHECK((cas.c - ground - cas.first).norm() <= 10.0 * l1 * l1);
}
