#pragma once

#include <vector>

#include "qctrl/control.hpp"
#include "qctrl/dipole.hpp"
#include "qctrl/spectral.hpp"

namespace qctrl {

// Mode-space operators of the truncated bilinear dynamics. Works for the
// sine-basis discretization (build) and for any finite bilinear system given
// directly by its spectrum and symmetric coupling (from_operators): the
// derivative pairing D and slope pairing S are the commutator expressions
// [M, Lambda] and -1/2 [M, [M, Lambda]], which keep every expansion identity
// exact at finite truncation.
struct GalerkinOperator {
  int N = 0;
  Vec lambda;  // increasing, distinct
  Mat M;       // symmetric coupling
  Mat D;       // D_{jn} = (lambda_n - lambda_j) M_{jn}   (antisymmetric)
  Mat S;       // -1/2 (M^2 L - 2 M L M + L M^2)          (symmetric)

  static GalerkinOperator build(const DipoleProfile& mu);
  static GalerkinOperator from_operators(Vec lambda, Mat M);
};

struct SimOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double max_dt = 1e-3;
};

// Integrate c' = i u(t) E+(t) M E-(t) c from t0 to t1, where E+-(t) are the
// rotating phases diag(exp(+-i lambda_j t)). Coefficients are taken against
// the rotating modes: c_j(t) = <psi(t), phi_j e^{-i lambda_j t}>. Steps are
// aligned to the cell edges of u so the integrator never crosses a breakpoint.
CVec evolve(const GalerkinOperator& op, const ControlSignal& u, CVec c0, double t0, double t1,
            const SimOptions& opt = {});

// Same dynamics, recording the state at each requested time (ascending,
// inside [t0, t1]).
std::vector<CVec> evolve_path(const GalerkinOperator& op, const ControlSignal& u, CVec c0,
                              double t0, double t1, const std::vector<double>& times,
                              const SimOptions& opt = {});

// Full state started at the first mode together with the first three layers
// of its expansion in powers of the control, each layer forced by the one
// below (the zeroth layer is the constant e1 of the free flight).
struct CascadeState {
  CVec c;       // full state
  CVec first;   // linear layer
  CVec second;  // quadratic layer
  CVec third;   // cubic layer
};
CascadeState evolve_cascade(const GalerkinOperator& op, const ControlSignal& u, double t0,
                            double t1, const SimOptions& opt = {});

// The same expansion after the gauge change that trades the control for its
// primitive u1: layers are forced through -u1 D and -i u1^2 S. The full
// auxiliary state evolves under the (skew-Hermitian) sum of both terms.
struct AuxCascadeState {
  CVec c;
  CVec first;
  CVec second;
  CVec third;
};
AuxCascadeState evolve_aux_cascade(const GalerkinOperator& op, const ControlSignal& u, double t0,
                                   double t1, const SimOptions& opt = {});

// Linear layer at the end of the control support, evaluated by the explicit
// oscillatory-moment formula instead of an ODE solve:
//   first_j = i M_{j1} int u(t) e^{i(lambda_j - lambda_1) t} dt.
CVec linear_term_moments(const GalerkinOperator& op, const ControlSignal& u);
// Auxiliary-picture analogue:
//   first_j = (lambda_j - lambda_1) M_{j1} int u1(t) e^{i(lambda_j - lambda_1) t} dt.
CVec aux_linear_term_moments(const GalerkinOperator& op, const ControlSignal& u);

// Mode-space gauge map at time t: c_aux = E+(t) expm(-i u1 M) E-(t) c.
CVec gauge_transform(const GalerkinOperator& op, double u1, double t, const CVec& c);

// Scalar-chain toy systems used to isolate the drift mechanisms:
//   drift_direct:     x1' = u, x2' = x1^2 + x1^3
//   drift_integrated: x1' = u, x2' = x1, x3' = x2^2 + x1^3
//   drift_competing:  x1' = u, x2' = x1, x3' = x2,
//                     x4' = x3^2 + x1^2 x2, x5' = x4
enum class ToyModel { drift_direct, drift_integrated, drift_competing };

// Final state at u.t_end() starting from the origin at u.t_begin().
Vec toy_final(ToyModel model, const ControlSignal& u, const SimOptions& opt = {});

}  // namespace qctrl
