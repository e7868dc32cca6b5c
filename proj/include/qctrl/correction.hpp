#pragma once

#include "qctrl/moment.hpp"

namespace qctrl {

// The re-correction loop started (or drifted) outside the linear regime of
// the moment model and cannot certify the requested endpoint.
class OutOfNeighborhoodError : public std::runtime_error {
 public:
  explicit OutOfNeighborhoodError(const std::string& what) : std::runtime_error(what) {}
};

struct NewtonOptions {
  int basis_size = 0;           // 0: 2|J| + 6
  int max_passes = 5;           // re-correction passes after the first check
  double endpoint_tol = 1e-8;   // projected L2 endpoint error to certify
  double linear_radius = 0.05;  // allowed L2 distance from the ground trajectory
  int cells_per_period = 16;
  SimOptions sim;
};

// L2 norm of a - b over all modes except K (1-based; K = 0 keeps all).
double projected_error(const CVec& a, const CVec& b, int K);

// Newton-style correction on [t1, T]: starting from the rotating-frame state
// c_start at t1, drive the projection of the full nonlinear flow on the modes
// J = {1..N} \ {K} to match target_proj at T. Each pass simulates the flow
// under the accumulated control, inverts the first-order moment model on the
// remaining mismatch, and adds the increment; it stops once the projected
// endpoint error is below opt.endpoint_tol (a finite stand-in for the local
// inverse of the endpoint map). The result carries the accumulated control,
// the pass count, and the certified endpoint error.
CorrectionResult correct_linear_components(const GalerkinOperator& op, const CVec& c_start,
                                           double t1, double T, const CVec& target_proj, int K,
                                           const NewtonOptions& opt = {});

// Same loop reusing a prebuilt solver; its interval must be [t1, T] and its
// mode set must match op with mode K excluded.
CorrectionResult correct_linear_components(const GalerkinOperator& op, const CVec& c_start,
                                           double t1, double T, const CVec& target_proj, int K,
                                           const MomentSolver& solver,
                                           const NewtonOptions& opt = {});

}  // namespace qctrl
