#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qctrl/control.hpp"
#include "qctrl/simulate.hpp"

namespace qctrl {

// The moment system's constraint matrix is numerically rank deficient:
// duplicated or nearly coincident frequencies, or an interval too short to
// separate them with the chosen basis. Carries the measured condition number.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double cond)
      : std::runtime_error(what), cond_(cond) {}
  double condition_number() const { return cond_; }

 private:
  double cond_ = 0.0;
};

// Moment targets for steering the linearized dynamics on [t0, t1] in
// projection on the modes J = {1..N} \ {K}. Around the ground trajectory the
// first-order change of the rotating coefficient of mode j is
//   c_j(t1) - c_j(t0) = i <mu phi_1, phi_j> int u(t) e^{i omega_j t} dt,
// omega_j = lambda_j - lambda_1, so a desired endpoint inverts mode by mode to
//   d_j = (c_final_j - c_start_j) / (i <mu phi_1, phi_j>).
// Mode 1 has omega_1 = 0 and a real moment u_1(t1): only Re d_1 is
// enforceable; Im d_1 is a second-order phase gap and is reported, not solved.
struct MomentTarget {
  double t0 = 0.0;
  double t1 = 1.0;
  int K = 0;                  // excluded mode, 1-based (0 = no exclusion)
  std::vector<int> modes;     // ascending, 1-based
  std::vector<double> omega;  // lambda_j - lambda_1 per mode
  std::vector<cplx> d;        // per mode

  // Build from rotating-frame coefficient vectors at t0 and t1. Modes other
  // than K whose coupling <mu phi_1, phi_j> vanishes (relative to the largest
  // coupling) are unreachable at first order and rejected.
  static MomentTarget from_endpoints(const GalerkinOperator& op, const CVec& c_start,
                                     const CVec& c_final, double t0, double t1, int K);
};

// A correction control on [t0, t1] plus the solver's bookkeeping. Negative-m
// norms use the weak norm |u_1(t1)| + ||u_|m|||_L2; m >= 0 are Sobolev norms
// of the delivered piecewise representation.
struct CorrectionResult {
  ControlSignal control;
  std::vector<int> modes;
  std::vector<cplx> target;    // d_j
  std::vector<cplx> achieved;  // moments of the returned control
  double residual_max = 0.0;   // max_j |achieved_j - d_j| (real parts for mode 1)
  double mode1_phase_gap = 0.0;  // |Im d_1|, unreachable at first order
  double boundary_gap = 0.0;     // max(|u_2(t1)|, |u_3(t1)|)
  double condition_number = 0.0;
  std::map<int, double> norms;  // m in {-3..2} -> H^m norm
  // Filled by the Newton loop of correct_linear_components: number of
  // re-correction passes and the certified projected endpoint error of the
  // full nonlinear flow. For a bare moment solve both stay zero. In that loop
  // residual_max measures the first-order model gap (second order in the
  // endpoint mismatch); endpoint_error is the nonlinear certificate.
  int newton_passes = 0;
  double endpoint_error = 0.0;
};

std::string correction_to_json(const CorrectionResult& r);

// Least-H2-norm solver for the truncated trigonometric moment problem
//   int u(t) e^{i omega_j t} dt = d_j   (j in modes),
//   u_1(t1) = Re d_1 (when mode 1 is present),  u_2(t1) = u_3(t1) = 0,
// over controls spanned by a fixed basis on [t0, t1]: a C-infinity window
// (flat at both endpoints) times low-frequency sines, plus one
// cosine/sine pair per nonzero target frequency. The constraint matrix,
// objective Gramian, and KKT factorization are built once and reused, so
// repeated solves on the same interval cost only a back-substitution.
class MomentSolver {
 public:
  // modes/omega as in MomentTarget. Requires basis_size >= 2*modes.size() + 3;
  // cells_per_period controls the sampling grid of the basis relative to its
  // fastest oscillation.
  MomentSolver(double t0, double t1, std::vector<int> modes, std::vector<double> omega,
               int basis_size, int cells_per_period = 16);

  // target must carry the same interval and mode set as the solver.
  CorrectionResult solve(const MomentTarget& target) const;

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  const std::vector<int>& modes() const { return modes_; }
  const std::vector<double>& omega() const { return omega_; }
  int basis_size() const { return static_cast<int>(funcs_.size()); }
  int cells() const { return cells_; }
  double condition_number() const { return cond_; }

 private:
  double t0_ = 0.0;
  double t1_ = 1.0;
  std::vector<int> modes_;
  std::vector<double> omega_;
  int mode1_pos_ = -1;  // position of mode 1 in modes_, or -1
  int cells_ = 0;
  std::vector<double> grid_;
  std::vector<PwPoly> funcs_;               // H2-normalized basis functions
  std::vector<std::vector<double>> vals_;   // Hermite data of funcs_
  std::vector<std::vector<double>> slopes_;
  Eigen::MatrixXd rows_;       // equilibrated real constraint rows
  Eigen::VectorXd row_scale_;  // applied to the raw rows and to d
  Eigen::PartialPivLU<Eigen::MatrixXd> kkt_;
  Eigen::MatrixXd kkt_matrix_;
  double cond_ = 0.0;

  Eigen::VectorXd stack_rhs(const MomentTarget& target) const;
};

// One-shot convenience: build a solver matching the target and solve.
CorrectionResult solve_moment_problem(const MomentTarget& target, int basis_size);

}  // namespace qctrl
