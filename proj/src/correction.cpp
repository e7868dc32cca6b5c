#include "qctrl/correction.hpp"

#include <cmath>

namespace qctrl {

double projected_error(const CVec& a, const CVec& b, int K) {
  double acc = 0.0;
  for (int j = 0; j < a.size(); ++j) {
    if (j + 1 == K) continue;
    acc += std::norm(a[j] - b[j]);
  }
  return std::sqrt(acc);
}

CorrectionResult correct_linear_components(const GalerkinOperator& op, const CVec& c_start,
                                           double t1, double T, const CVec& target_proj, int K,
                                           const NewtonOptions& opt) {
  MomentTarget probe = MomentTarget::from_endpoints(op, c_start, target_proj, t1, T, K);
  const int basis =
      opt.basis_size > 0 ? opt.basis_size : 2 * static_cast<int>(probe.modes.size()) + 6;
  MomentSolver solver(t1, T, probe.modes, probe.omega, basis, opt.cells_per_period);
  return correct_linear_components(op, c_start, t1, T, target_proj, K, solver, opt);
}

CorrectionResult correct_linear_components(const GalerkinOperator& op, const CVec& c_start,
                                           double t1, double T, const CVec& target_proj, int K,
                                           const MomentSolver& solver, const NewtonOptions& opt) {
  if (c_start.size() != op.N || target_proj.size() != op.N)
    throw std::invalid_argument("correct_linear_components: coefficient size mismatch");
  CVec ground = CVec::Zero(op.N);
  ground[0] = 1.0;
  const double start_gap = (c_start - ground).norm();
  if (start_gap >= opt.linear_radius)
    throw OutOfNeighborhoodError(
        "correct_linear_components: start state " + std::to_string(start_gap) +
        " from the ground trajectory exceeds the linear-regime radius");

  ControlSignal total = ControlSignal::zero(t1, T);
  const MomentTarget first_target =
      MomentTarget::from_endpoints(op, c_start, target_proj, t1, T, K);
  int passes = 0;
  double err = 0.0;
  while (true) {
    const CVec c_end = evolve(op, total, c_start, t1, T, opt.sim);
    const double end_gap = (c_end - ground).norm();
    if (end_gap >= opt.linear_radius)
      throw OutOfNeighborhoodError(
          "correct_linear_components: endpoint left the linear regime (distance " +
          std::to_string(end_gap) + ")");
    err = projected_error(c_end, target_proj, K);
    if (err < opt.endpoint_tol) break;
    if (passes >= opt.max_passes)
      throw OutOfNeighborhoodError(
          "correct_linear_components: projected endpoint error " + std::to_string(err) +
          " after " + std::to_string(passes) + " passes; target out of reach");
    const MomentTarget incr = MomentTarget::from_endpoints(op, c_end, target_proj, t1, T, K);
    total = total.plus(solver.solve(incr).control);
    ++passes;
  }

  // Rebuild the bookkeeping around the accumulated control. The moment
  // residuals against the first-pass target measure the first-order model
  // gap; the certificate is the simulated endpoint error.
  CorrectionResult res;
  res.control = total;
  res.modes = first_target.modes;
  res.target = first_target.d;
  const int m = static_cast<int>(first_target.modes.size());
  res.achieved.resize(m);
  double rmax = 0.0;
  for (int r = 0; r < m; ++r) {
    if (first_target.modes[r] == 1) {
      const double u1_end = total.primitive(1)(T);
      res.achieved[r] = u1_end;
      rmax = std::max(rmax, std::abs(u1_end - first_target.d[r].real()));
      res.mode1_phase_gap = std::abs(first_target.d[r].imag());
    } else {
      const cplx mv = total.u().moment(first_target.omega[r]);
      res.achieved[r] = mv;
      rmax = std::max(rmax, std::abs(mv - first_target.d[r]));
    }
  }
  res.residual_max = rmax;
  res.boundary_gap = std::max(std::abs(total.primitive(2)(T)), std::abs(total.primitive(3)(T)));
  res.condition_number = solver.condition_number();
  for (int k = 1; k <= 3; ++k) res.norms[-k] = total.weak_norm(k);
  const double s0 = total.seminorm(0, 2.0);
  const double s1 = total.seminorm(1, 2.0);
  const double s2 = total.seminorm(2, 2.0);
  res.norms[0] = s0;
  res.norms[1] = std::hypot(s0, s1);
  res.norms[2] = std::hypot(s0, s1, s2);
  res.newton_passes = passes;
  res.endpoint_error = err;
  return res;
}

}  // namespace qctrl
