#include "qctrl/toys.hpp"

#include <cmath>
#include <stdexcept>

#include "qctrl/kernels.hpp"

namespace qctrl {

namespace {

ControlSignal family_pulse(double b, double gain_target, double amp_exp, double width_exp,
                           int deriv, double profile_gain, double start) {
  if (!std::isfinite(b)) throw std::invalid_argument("oscillating control: b must be finite");
  if (b == 0.0) return ControlSignal::zero(start, start + 1.0);
  // phi = scale * profile rescales the gain integral by scale^3
  const double scale = std::cbrt(gain_target / profile_gain);
  Pulse p;
  p.amp = (b > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(b), amp_exp) * scale;
  p.start = start;
  p.width = std::pow(std::abs(b), width_exp);
  p.deriv = deriv;
  return ControlSignal::pulse(p, 4096);
}

}  // namespace

ControlSignal oscillating_control_pde(double b, double drift_constant, double start) {
  if (drift_constant == 0.0 || !std::isfinite(drift_constant))
    throw std::invalid_argument("oscillating control: drift constant must be finite and nonzero");
  return family_pulse(b, 1.0 / drift_constant, 7.0 / 41.0, 4.0 / 41.0, 3, profile_gain_second(),
                      start);
}

ControlSignal oscillating_control_toy(double b, double start) {
  return family_pulse(b, 1.0, 7.0 / 41.0, 4.0 / 41.0, 3, profile_gain_second(), start);
}

ControlSignal oscillating_control_sussmann(double b, double start) {
  return family_pulse(b, 1.0, 1.0 / 11.0, 2.0 / 11.0, 2, profile_gain_first(), start);
}

double tm1_quadrature(const ControlSignal& u) {
  const PwPoly& u1 = u.primitive(1);
  PwPoly sq = u1.times(u1);
  return sq.integral() + sq.times(u1).integral();
}

double sussmann_quadrature(const ControlSignal& u) {
  const PwPoly& u1 = u.primitive(1);
  const PwPoly& u2 = u.primitive(2);
  return u2.l2_inner(u2) + u1.times(u1).times(u1).integral();
}

std::pair<double, double> tm3_quadrature(const ControlSignal& u) {
  const PwPoly& u1 = u.primitive(1);
  const PwPoly& u2 = u.primitive(2);
  const PwPoly& u3 = u.primitive(3);
  PwPoly integrand = u3.times(u3).plus(u1.times(u1).times(u2));
  double x4 = integrand.integral();
  double x5 = u.t_end() * x4 - integrand.times_t().integral();
  return {x4, x5};
}

double uniform_pm1(std::mt19937_64& rng) {
  // top 53 bits -> [0, 1), affine to [-1, 1); avoids distribution objects so
  // the stream is identical across standard libraries
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

ControlSignal random_windowed_control(std::mt19937_64& rng, int harmonics) {
  if (harmonics < 1) throw std::invalid_argument("random control: need at least one harmonic");
  std::vector<double> amp(harmonics), phase(harmonics);
  for (int k = 0; k < harmonics; ++k) {
    amp[k] = uniform_pm1(rng);
    phase[k] = kPi * uniform_pm1(rng);
  }
  auto f = [amp, phase, harmonics](double t) {
    double w = t * (1.0 - t);
    if (w <= 0.0) return 0.0;
    double envelope = std::exp(-0.05 / w);
    double s = 0.0;
    for (int k = 0; k < harmonics; ++k) s += amp[k] * std::sin((k + 1) * kPi * t + phase[k]);
    return envelope * s;
  };
  return ControlSignal::from_function(0.0, 1.0, 2048, f);
}

std::vector<DriftSample> tm1_drift_experiment(std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  std::vector<DriftSample> out;
  out.reserve(samples);
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  for (int i = 0; i < samples; ++i) {
    ControlSignal raw = random_windowed_control(rng, 5);
    double level = 0.3 * (0.05 + 0.95 * 0.5 * (uniform_pm1(rng) + 1.0));
    double m = raw.primitive(1).sup_norm();
    if (!(m > 1e-12)) throw std::runtime_error("tm1 experiment: degenerate random draw");
    ControlSignal u = raw.scaled(level / m);
    double x2 = toy_final(ToyModel::drift_direct, u, opt)[1];
    const PwPoly& u1 = u.primitive(1);
    DriftSample s;
    s.drift_value = x2;
    s.comparator = 0.7 * u1.l2_inner(u1);
    s.margin = s.drift_value - s.comparator;
    s.quadrature_gap = std::abs(x2 - tm1_quadrature(u));
    out.push_back(s);
  }
  return out;
}

std::vector<DriftSample> sussmann_inequality_experiment(std::uint64_t seed, int samples,
                                                        double radius) {
  if (!(radius > 0.0) || radius > 0.5)
    throw std::invalid_argument("drift inequality: radius must lie in (0, 1/2]");
  std::mt19937_64 rng(seed);
  std::vector<DriftSample> out;
  out.reserve(samples);
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  for (int i = 0; i < samples; ++i) {
    ControlSignal raw = random_windowed_control(rng, 5);
    double level = radius * (0.05 + 0.95 * 0.5 * (uniform_pm1(rng) + 1.0));
    double m = std::max(raw.u().sup_norm(), raw.u().derivative().sup_norm());
    if (!(m > 1e-12)) throw std::runtime_error("drift inequality: degenerate random draw");
    ControlSignal u = raw.scaled(level / m);
    double x3 = toy_final(ToyModel::drift_integrated, u, opt)[2];
    const PwPoly& u2 = u.primitive(2);
    DriftSample s;
    s.drift_value = x3;
    s.comparator = 0.5 * u2.l2_inner(u2);
    s.margin = s.drift_value - s.comparator;
    s.quadrature_gap = std::abs(x3 - sussmann_quadrature(u));
    out.push_back(s);
  }
  return out;
}

RecoverySweep sussmann_recovery_sweep(const std::vector<double>& b_grid) {
  RecoverySweep sweep;
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  std::vector<double> xs, ys;
  for (double b : b_grid) {
    ControlSignal u = oscillating_control_sussmann(b);
    RecoveryPoint p;
    p.b = b;
    p.final_value = toy_final(ToyModel::drift_integrated, u, opt)[2];
    p.residual = std::abs(p.final_value - b);
    sweep.points.push_back(p);
    xs.push_back(std::abs(b));
    ys.push_back(p.residual);
  }
  sweep.fit = slope_fit(xs, ys);
  return sweep;
}

CompositeSweep tm3_composite_sweep(double T, const std::vector<double>& b_grid, double ratio) {
  if (!(T > 0.0)) throw std::invalid_argument("composite sweep: need T > 0");
  CompositeSweep sweep;
  sweep.T = T;
  SimOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-13;
  std::vector<double> xs, ys;
  for (double b : b_grid) {
    const double c = ratio * b;
    ControlSignal first = oscillating_control_toy(b);
    if (!(first.duration() < T) || !(std::pow(std::abs(c), 4.0 / 41.0) < T))
      throw std::invalid_argument("composite sweep: pulse width must fit inside one segment");
    ControlSignal u = ControlSignal::concat(first, ControlSignal::zero(first.t_end(), 2.0 * T));
    if (c != 0.0) {
      ControlSignal second = oscillating_control_toy(c, 2.0 * T);
      u = ControlSignal::concat(u, second);
    }
    u = ControlSignal::concat(u, ControlSignal::zero(u.t_end(), 3.0 * T));
    Vec x = toy_final(ToyModel::drift_competing, u, opt);
    CompositePoint p;
    p.b = b;
    p.c = c;
    p.x4 = x[3];
    p.x5 = x[4];
    double t4 = b + c;
    double t5 = (b + c) * T + 2.0 * T * b;
    p.residual = std::hypot(x[3] - t4, x[4] - t5);
    p.chain_leak = std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
    sweep.points.push_back(p);
    xs.push_back(std::abs(b));
    ys.push_back(p.residual);
  }
  sweep.fit = slope_fit(xs, ys);
  return sweep;
}

namespace {

// <ad^3_{H1}(H0) e1, e2> for diagonal H0; multilinear in the three H1 slots.
double ad3_entry_12(const Vec& lambda, const Mat& M) {
  Mat H0 = lambda.asDiagonal();
  Mat A1 = M * H0 - H0 * M;
  Mat A2 = M * A1 - A1 * M;
  Mat A3 = M * A2 - A2 * M;
  return A3(1, 0);
}

}  // namespace

GalerkinOperator BilinearInstance::op() const {
  return GalerkinOperator::from_operators(lambda, coupling);
}

BilinearInstance make_bilinear_instance() {
  const int p = 5;
  Vec lambda(p);
  lambda << 0.0, 1.0, 1.75, 2.5, 3.5;  // dyadic: the series cancellations are exact
  const double mid = 0.5 * (lambda[0] + lambda[1]);
  // g_j = (l2 - lj)(lj - l1); the quadratic series along K = 2 is
  // sum_j (lj - mid) g_j^{m-1} x_j with x_j = M_1j M_2j, so
  // y = (g4-g5, g5-g3, g3-g4) spans the null space of the m = 1, 2 rows.
  const double g3 = (lambda[1] - lambda[2]) * (lambda[2] - lambda[0]);
  const double g4 = (lambda[1] - lambda[3]) * (lambda[3] - lambda[0]);
  const double g5 = (lambda[1] - lambda[4]) * (lambda[4] - lambda[0]);
  const double s = 1.0 / 64.0;
  const double x3 = s * (g4 - g5) / (lambda[2] - mid);
  const double x4 = s * (g5 - g3) / (lambda[3] - mid);
  const double x5 = s * (g3 - g4) / (lambda[4] - mid);

  Mat M = Mat::Zero(p, p);
  M(0, 0) = 0.4;
  M(1, 1) = 0.35;
  M(2, 2) = 0.25;
  M(3, 3) = -0.2;
  M(4, 4) = 0.3;
  M(0, 2) = M(2, 0) = 0.5;
  M(0, 3) = M(3, 0) = 0.5;
  M(0, 4) = M(4, 0) = 0.25;
  M(1, 2) = M(2, 1) = x3 / M(0, 2);
  M(1, 3) = M(3, 1) = x4 / M(0, 3);
  M(1, 4) = M(4, 1) = x5 / M(0, 4);
  M(2, 3) = M(3, 2) = 0.15;
  M(2, 4) = M(4, 2) = -0.1;

  // the 4-5 edge enters the 1 -> 2 bracket entry through the two length-3
  // paths 1-4-5-2 and 1-5-4-2, each using it once, so the entry is affine
  auto bracket_at = [&](double theta) {
    Mat Mt = M;
    Mt(3, 4) = Mt(4, 3) = theta;
    return ad3_entry_12(lambda, Mt);
  };
  const double f0 = bracket_at(0.0);
  const double f1 = bracket_at(1.0);
  if (!(std::abs(f1 - f0) > 1e-12))
    throw std::runtime_error("bilinear instance: degenerate bracket slope");
  const double theta = -f0 / (f1 - f0);
  M(3, 4) = M(4, 3) = theta;

  BilinearInstance inst;
  inst.lambda = lambda;
  inst.coupling = M;
  inst.K = 2;
  inst.ad3_entry = ad3_entry_12(lambda, M);

  KernelSet ks(inst.op(), inst.K, SlopeEntries::commutator);
  inst.a1 = ks.a1();
  inst.a2 = ks.a2();
  inst.a3 = ks.a3();
  cplx corner = ks.cubic1(0.0, 0.0) - ks.cubic2(0.0, 0.0);
  if (std::abs(corner.imag()) > 1e-12 * (1.0 + std::abs(corner.real())))
    throw std::runtime_error("bilinear instance: kernel corner difference is not real");
  inst.cubic_constant = corner.real();
  return inst;
}

}  // namespace qctrl
