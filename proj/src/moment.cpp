#include "qctrl/moment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qctrl/bump.hpp"

namespace qctrl {

namespace {

// Jet in t of the C-infinity window on [t0, t0 + dt]: S(y/0.35) S((1-y)/0.35)
// in the normalized time y, flat to all orders at both endpoints. The 0.35
// ramps leave a plateau in the middle third.
Jet window_jet(double t, double t0, double dt) {
  const double y = (t - t0) / dt;
  Jet rise = jet_rescale(smoothstep_jet(y / 0.35), 0.35);
  Jet fall = jet_rescale(smoothstep_jet((1.0 - y) / 0.35), -0.35);
  return jet_rescale(jet_mul(rise, fall), dt);
}

}  // namespace

MomentTarget MomentTarget::from_endpoints(const GalerkinOperator& op, const CVec& c_start,
                                          const CVec& c_final, double t0, double t1, int K) {
  if (c_start.size() != op.N || c_final.size() != op.N)
    throw std::invalid_argument("from_endpoints: coefficient size mismatch");
  if (!(t1 > t0)) throw std::invalid_argument("from_endpoints: empty interval");
  MomentTarget tgt;
  tgt.t0 = t0;
  tgt.t1 = t1;
  tgt.K = K;
  const double floor = 1e-12 * op.M.col(0).cwiseAbs().maxCoeff();
  for (int j = 1; j <= op.N; ++j) {
    if (j == K) continue;
    const double coupling = op.M(j - 1, 0);
    if (std::abs(coupling) <= floor)
      throw std::invalid_argument("from_endpoints: mode " + std::to_string(j) +
                                  " has vanishing ground coupling and cannot be targeted");
    tgt.modes.push_back(j);
    tgt.omega.push_back(op.lambda[j - 1] - op.lambda[0]);
    tgt.d.push_back((c_final[j - 1] - c_start[j - 1]) / (cplx(0.0, 1.0) * coupling));
  }
  return tgt;
}

MomentSolver::MomentSolver(double t0, double t1, std::vector<int> modes,
                           std::vector<double> omega, int basis_size, int cells_per_period)
    : t0_(t0), t1_(t1), modes_(std::move(modes)), omega_(std::move(omega)) {
  const int m = static_cast<int>(modes_.size());
  if (!(t1_ > t0_)) throw std::invalid_argument("MomentSolver: empty interval");
  if (m == 0 || static_cast<int>(omega_.size()) != m)
    throw std::invalid_argument("MomentSolver: modes/omega size mismatch");
  if (!std::is_sorted(modes_.begin(), modes_.end()) ||
      std::adjacent_find(modes_.begin(), modes_.end()) != modes_.end())
    throw std::invalid_argument("MomentSolver: modes must be ascending and distinct");
  if (basis_size < 2 * m + 3)
    throw std::invalid_argument("MomentSolver: basis_size must be at least 2|J| + 3");
  for (int r = 0; r < m; ++r) {
    if (modes_[r] == 1) mode1_pos_ = r;
    if ((modes_[r] == 1) != (omega_[r] == 0.0))
      throw std::invalid_argument("MomentSolver: omega must vanish exactly for mode 1 only");
  }

  const double dt = t1_ - t0_;
  const int n_pair = m - (mode1_pos_ >= 0 ? 1 : 0);
  const int n_sin = basis_size - 2 * n_pair;  // >= 3 by the size precondition

  double omega_max = n_sin * kPi / dt;
  for (double w : omega_) omega_max = std::max(omega_max, w);
  cells_per_period = std::clamp(cells_per_period, 4, 64);
  cells_ = std::max(
      512, static_cast<int>(std::ceil(cells_per_period * omega_max * dt / (2.0 * kPi))));
  if (cells_ > 200000)
    throw std::invalid_argument(
        "MomentSolver: frequency/interval combination needs an unreasonably fine grid");

  grid_.resize(cells_ + 1);
  for (int p = 0; p <= cells_; ++p) grid_[p] = t0_ + dt * p / cells_;
  grid_.back() = t1_;

  // Window jets once per grid point; each basis function is window * trig.
  std::vector<Jet> win(cells_ + 1);
  for (int p = 0; p <= cells_; ++p) win[p] = window_jet(grid_[p], t0_, dt);

  const int B = basis_size;
  vals_.assign(B, std::vector<double>(cells_ + 1));
  slopes_.assign(B, std::vector<double>(cells_ + 1));
  auto fill = [&](int i, double w, double phase, bool sine) {
    for (int p = 0; p <= cells_; ++p) {
      Jet trig = sine ? jet_sin(w, phase, grid_[p]) : jet_cos(w, phase, grid_[p]);
      Jet prod = jet_mul(win[p], trig);
      vals_[i][p] = prod[0];
      slopes_[i][p] = prod[1];
    }
  };
  int idx = 0;
  for (int k = 1; k <= n_sin; ++k, ++idx) fill(idx, k * kPi / dt, -k * kPi * t0_ / dt, true);
  for (int r = 0; r < m; ++r) {
    if (r == mode1_pos_) continue;
    fill(idx, omega_[r], -omega_[r] * t0_, false);
    fill(idx + 1, omega_[r], -omega_[r] * t0_, true);
    idx += 2;
  }

  // Interpolants and their derivatives, normalized to unit H2 norm so the
  // objective Gramian has unit diagonal.
  funcs_.resize(B);
  std::vector<PwPoly> d1(B), d2(B);
  for (int i = 0; i < B; ++i) {
    funcs_[i] = PwPoly::from_hermite(grid_, vals_[i], slopes_[i]);
    d1[i] = funcs_[i].derivative();
    d2[i] = d1[i].derivative();
    const double h2 = std::hypot(funcs_[i].l2_norm(), d1[i].l2_norm(), d2[i].l2_norm());
    if (!(h2 > 0.0) || !std::isfinite(h2))
      throw std::invalid_argument("MomentSolver: degenerate basis function");
    const double inv = 1.0 / h2;
    funcs_[i] = funcs_[i].scaled(inv);
    d1[i] = d1[i].scaled(inv);
    d2[i] = d2[i].scaled(inv);
    for (int p = 0; p <= cells_; ++p) {
      vals_[i][p] *= inv;
      slopes_[i][p] *= inv;
    }
  }

  Eigen::MatrixXd gram(B, B);
  for (int i = 0; i < B; ++i)
    for (int l = 0; l <= i; ++l) {
      const double g =
          funcs_[i].l2_inner(funcs_[l]) + d1[i].l2_inner(d1[l]) + d2[i].l2_inner(d2[l]);
      gram(i, l) = gram(l, i) = g;
    }

  // Real constraint rows: (Re, Im) moment pair per nonzero frequency in mode
  // order, then the real mode-1 row u_1(t1), then u_2(t1) and u_3(t1).
  const int R = 2 * n_pair + (mode1_pos_ >= 0 ? 1 : 0) + 2;
  Eigen::MatrixXd raw(R, B);
  for (int i = 0; i < B; ++i) {
    int row = 0;
    for (int r = 0; r < m; ++r) {
      if (r == mode1_pos_) continue;
      const cplx mom = funcs_[i].moment(omega_[r]);
      raw(row++, i) = mom.real();
      raw(row++, i) = mom.imag();
    }
    const PwPoly p1 = funcs_[i].antiderivative();
    const PwPoly p2 = p1.antiderivative();
    const PwPoly p3 = p2.antiderivative();
    if (mode1_pos_ >= 0) raw(row++, i) = p1(t1_);
    raw(row++, i) = p2(t1_);
    raw(row, i) = p3(t1_);
  }

  row_scale_.resize(R);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < R; ++k) {
    const double nrm = raw.row(k).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw IllConditionedError("moment constraint row " + std::to_string(k) + " degenerated",
                                kInf);
    row_scale_[k] = 1.0 / nrm;
    raw.row(k) *= row_scale_[k];
  }
  rows_ = raw;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows_);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  cond_ = smin > 0.0 ? smax / smin : kInf;
  if (!(smin > smax * 1e-12))
    throw IllConditionedError(
        "moment constraints numerically rank deficient (condition number " +
            std::to_string(cond_) + "): frequencies too close for the basis",
        cond_);

  kkt_matrix_ = Eigen::MatrixXd::Zero(B + R, B + R);
  kkt_matrix_.topLeftCorner(B, B) = 2.0 * gram;
  kkt_matrix_.topRightCorner(B, R) = rows_.transpose();
  kkt_matrix_.bottomLeftCorner(R, B) = rows_;
  kkt_ = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt_matrix_);
}

Eigen::VectorXd MomentSolver::stack_rhs(const MomentTarget& target) const {
  const int m = static_cast<int>(modes_.size());
  const double scale = 1.0 + std::abs(t0_) + std::abs(t1_);
  if (std::abs(target.t0 - t0_) > 1e-12 * scale || std::abs(target.t1 - t1_) > 1e-12 * scale)
    throw std::invalid_argument("MomentSolver: target interval does not match the solver");
  if (target.modes != modes_ || static_cast<int>(target.d.size()) != m)
    throw std::invalid_argument("MomentSolver: target mode set does not match the solver");
  for (int r = 0; r < m; ++r)
    if (std::abs(target.omega[r] - omega_[r]) > 1e-9 * (1.0 + std::abs(omega_[r])))
      throw std::invalid_argument("MomentSolver: target frequencies do not match the solver");

  Eigen::VectorXd d(rows_.rows());
  int row = 0;
  for (int r = 0; r < m; ++r) {
    if (r == mode1_pos_) continue;
    d[row] = target.d[r].real() * row_scale_[row];
    ++row;
    d[row] = target.d[r].imag() * row_scale_[row];
    ++row;
  }
  if (mode1_pos_ >= 0) {
    d[row] = target.d[mode1_pos_].real() * row_scale_[row];
    ++row;
  }
  d[row] = 0.0;
  d[row + 1] = 0.0;
  return d;
}

CorrectionResult MomentSolver::solve(const MomentTarget& target) const {
  const int B = basis_size();
  const int R = static_cast<int>(rows_.rows());
  const int m = static_cast<int>(modes_.size());

  const Eigen::VectorXd d = stack_rhs(target);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(B + R);
  rhs.tail(R) = d;
  Eigen::VectorXd sol = kkt_.solve(rhs);
  double gap = (rhs - kkt_matrix_ * sol).cwiseAbs().maxCoeff();
  for (int pass = 0; pass < 3 && gap > 1e-15 * (1.0 + rhs.cwiseAbs().maxCoeff()); ++pass) {
    sol += kkt_.solve(rhs - kkt_matrix_ * sol);
    const double next = (rhs - kkt_matrix_ * sol).cwiseAbs().maxCoeff();
    if (next >= gap) break;
    gap = next;
  }
  const Eigen::VectorXd x = sol.head(B);

  const double feas = (rows_ * x - d).cwiseAbs().maxCoeff();
  if (!std::isfinite(feas) || feas > 1e-8 * (1.0 + d.cwiseAbs().maxCoeff()))
    throw IllConditionedError(
        "moment solve lost feasibility (condition number " + std::to_string(cond_) + ")", cond_);

  std::vector<double> v(cells_ + 1, 0.0), s(cells_ + 1, 0.0);
  for (int i = 0; i < B; ++i) {
    if (x[i] == 0.0) continue;
    for (int p = 0; p <= cells_; ++p) {
      v[p] += x[i] * vals_[i][p];
      s[p] += x[i] * slopes_[i][p];
    }
  }
  ControlSignal u(PwPoly::from_hermite(grid_, v, s));

  CorrectionResult res;
  res.control = u;
  res.modes = modes_;
  res.target = target.d;
  res.achieved.resize(m);
  double rmax = 0.0;
  for (int r = 0; r < m; ++r) {
    if (r == mode1_pos_) {
      const double u1_end = u.primitive(1)(t1_);
      res.achieved[r] = u1_end;
      rmax = std::max(rmax, std::abs(u1_end - target.d[r].real()));
      res.mode1_phase_gap = std::abs(target.d[r].imag());
    } else {
      const cplx mv = u.u().moment(omega_[r]);
      res.achieved[r] = mv;
      rmax = std::max(rmax, std::abs(mv - target.d[r]));
    }
  }
  res.residual_max = rmax;
  res.boundary_gap = std::max(std::abs(u.primitive(2)(t1_)), std::abs(u.primitive(3)(t1_)));
  res.condition_number = cond_;
  for (int k = 1; k <= 3; ++k) res.norms[-k] = u.weak_norm(k);
  const double s0 = u.seminorm(0, 2.0);
  const double s1 = u.seminorm(1, 2.0);
  const double s2 = u.seminorm(2, 2.0);
  res.norms[0] = s0;
  res.norms[1] = std::hypot(s0, s1);
  res.norms[2] = std::hypot(s0, s1, s2);
  return res;
}

CorrectionResult solve_moment_problem(const MomentTarget& target, int basis_size) {
  MomentSolver solver(target.t0, target.t1, target.modes, target.omega, basis_size);
  return solver.solve(target);
}

std::string correction_to_json(const CorrectionResult& r) {
  nlohmann::json j;
  j["interval"] = {r.control.t_begin(), r.control.t_end()};
  j["modes"] = r.modes;
  auto stack = [](const std::vector<cplx>& z) {
    nlohmann::json arr = nlohmann::json::array();
    for (const cplx& c : z) arr.push_back({c.real(), c.imag()});
    return arr;
  };
  j["target"] = stack(r.target);
  j["achieved"] = stack(r.achieved);
  j["residual_max"] = r.residual_max;
  j["mode1_phase_gap"] = r.mode1_phase_gap;
  j["boundary_gap"] = r.boundary_gap;
  j["condition_number"] = r.condition_number;
  nlohmann::json norms;
  for (const auto& [m, val] : r.norms) norms[std::to_string(m)] = val;
  j["norms"] = norms;
  j["newton_passes"] = r.newton_passes;
  j["endpoint_error"] = r.endpoint_error;
  nlohmann::json ctl;
  ctl["cells"] = r.control.u().cells();
  ctl["sup_norm"] = r.control.u().sup_norm();
  ctl["l2_norm"] = r.control.u().l2_norm();
  j["control"] = ctl;
  return j.dump(2);
}

}  // namespace qctrl
