#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qctrl/control.hpp"
#include "qctrl/report.hpp"
#include "qctrl/simulate.hpp"

namespace qctrl {

// ---------------------------------------------------------------------------
// Oscillating pulse families
//
// Every family is u_b(t) = sign(b) |b|^p phi^{(d)}((t - start)/|b|^q) built
// from the shared pulse profile, with phi = scale * profile chosen so that
// the drift integral the family is designed to produce equals b exactly:
//   second-order family (d = 3, p = 7/41, q = 4/41):
//       int phi''^2 phi' = 1/drift_constant   (toy variant: = 1)
//   first-order family  (d = 2, p = 1/11, q = 2/11):
//       int phi'^3 = 1
// Support is [start, start + |b|^q]; the first d primitives vanish at both
// ends. b = 0 returns the zero signal on [start, start + 1].
// ---------------------------------------------------------------------------

ControlSignal oscillating_control_pde(double b, double drift_constant, double start = 0.0);
ControlSignal oscillating_control_toy(double b, double start = 0.0);
ControlSignal oscillating_control_sussmann(double b, double start = 0.0);

// ---------------------------------------------------------------------------
// Exact piecewise-polynomial quadrature of the drift functionals (independent
// of the ODE integrator; operates on the control's exact primitives).
// ---------------------------------------------------------------------------

// First-order drift model: x2(T) = int u1^2 + u1^3.
double tm1_quadrature(const ControlSignal& u);
// Integrated drift model: x3(T) = int u2^2 + u1^3.
double sussmann_quadrature(const ControlSignal& u);
// Competing drift model: x4(T) = int u3^2 + u1^2 u2 and
// x5(T) = int (T - t)(u3^2 + u1^2 u2).
std::pair<double, double> tm3_quadrature(const ControlSignal& u);

// ---------------------------------------------------------------------------
// Randomized control families (implementation-independent uniforms from raw
// 64-bit draws, so seeded sweeps produce identical CSV on any platform).
// ---------------------------------------------------------------------------

double uniform_pm1(std::mt19937_64& rng);

// Windowed random trigonometric polynomial on [0, 1]; unscaled.
ControlSignal random_windowed_control(std::mt19937_64& rng, int harmonics);

struct DriftSample {
  double drift_value = 0.0;  // integrated drift coordinate
  double comparator = 0.0;   // certified lower bound it must dominate
  double margin = 0.0;       // drift_value - comparator
  double quadrature_gap = 0.0;  // |integrator - exact quadrature|
};

// First-order drift obstruction: for nonzero u with sup|u1| <= 0.3 the drift
// coordinate satisfies x2(T) >= 0.7 int u1^2 > 0.
std::vector<DriftSample> tm1_drift_experiment(std::uint64_t seed, int samples);

// Integrated drift inequality: for max(sup|u|, sup|u'|) <= radius <= 1/2,
// x3(T) >= 1/2 int u2^2.
std::vector<DriftSample> sussmann_inequality_experiment(std::uint64_t seed, int samples,
                                                        double radius);

// ---------------------------------------------------------------------------
// Drift-recovery sweeps
// ---------------------------------------------------------------------------

struct RecoveryPoint {
  double b = 0.0;
  double final_value = 0.0;  // drift coordinate reached
  double residual = 0.0;     // |final_value - b|
};
struct RecoverySweep {
  std::vector<RecoveryPoint> points;
  SlopeFit fit;  // residual vs |b|
};

// First-order family on the integrated drift model: x3 = b + O(|b|^{12/11}).
RecoverySweep sussmann_recovery_sweep(const std::vector<double>& b_grid);

// Two-pulse composite for the competing drift model on [0, 3T]: the second
// pulse starts at 2T and the endpoint decomposes as
//   x(3T) = (b + c)(e4 + T e5) + 2 T b e5 + O(|(b, c)|^{1 + 1/41}),
// with x1 = x2 = x3 = 0 up to integrator tolerance. c = ratio * b along the
// sweep ray; ratio = -1 isolates the pure e5 move.
struct CompositePoint {
  double b = 0.0, c = 0.0;
  double x4 = 0.0, x5 = 0.0;
  double residual = 0.0;       // distance to the decomposition target
  double chain_leak = 0.0;     // max |x1|, |x2|, |x3|
};
struct CompositeSweep {
  double T = 0.0;
  std::vector<CompositePoint> points;
  SlopeFit fit;  // residual vs |b|
};
CompositeSweep tm3_composite_sweep(double T, const std::vector<double>& b_grid, double ratio);

// ---------------------------------------------------------------------------
// Five-level bilinear Schrodinger ODE instance with the lost direction on
// mode 2: coupling (H1 e1, e2) = 0, quadratic drift series a1 = a2 = 0 by an
// exact null-space construction over the mode-(3,4,5) coupling products,
// a3 != 0, cubic bracket (ad^3_{H1}(H0) e1, e2) = 0 by one affine solve on
// the 4-5 edge, and nonzero cubic kernel constant.
// ---------------------------------------------------------------------------

struct BilinearInstance {
  Vec lambda;    // H0 spectrum (increasing, dyadic)
  Mat coupling;  // H1 in the H0 eigenbasis (symmetric)
  int K = 2;     // lost direction
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;  // quadratic drift series along K
  double cubic_constant = 0.0;          // kernel corner difference
  double ad3_entry = 0.0;               // residual of the tuned bracket entry
  GalerkinOperator op() const;
};

BilinearInstance make_bilinear_instance();

}  // namespace qctrl
