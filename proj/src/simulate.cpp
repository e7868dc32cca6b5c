#include "qctrl/simulate.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <stdexcept>

namespace qctrl {

namespace {

using State = std::vector<cplx>;
namespace odeint = boost::numeric::odeint;

// Integrate dx/dt = sys(x, t) from t0 to t1 without stepping across any of
// the sorted breakpoints (integration restarts at each). dopri5 with both
// tolerances from opt.
template <typename StateT, typename System>
void integrate_segments(System sys, StateT& x, double t0, double t1,
                        const std::vector<double>& breakpoints, const SimOptions& opt) {
  auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol,
                                         odeint::runge_kutta_dopri5<StateT>());
  double t = t0;
  auto advance = [&](double target) {
    if (target <= t) return;
    double dt0 = std::min(opt.max_dt, target - t);
    odeint::integrate_adaptive(stepper, sys, x, t, target, dt0);
    t = target;
  };
  for (double b : breakpoints) {
    if (b <= t0 || b >= t1) continue;
    advance(b);
  }
  advance(t1);
}

// Rotating phases at time t: minus[j] = e^{-i lambda_j t}.
void phases(const Vec& lambda, double t, State& minus) {
  const int n = static_cast<int>(lambda.size());
  for (int j = 0; j < n; ++j) {
    double a = lambda[j] * t;
    minus[j] = cplx(std::cos(a), -std::sin(a));
  }
}

// y = A (E- x) as a complex matvec with a real matrix (two real products).
CVec rotated_matvec(const Mat& A, const State& minus, const Eigen::Ref<const CVec>& x) {
  const int n = static_cast<int>(minus.size());
  CVec w(n);
  for (int j = 0; j < n; ++j) w[j] = minus[j] * x[j];
  CVec y(n);
  y.real() = A * w.real();
  y.imag() = A * w.imag();
  return y;
}

// Right-hand side of the interaction-picture bilinear dynamics on a stack of
// column states: for each column x, dx = i u(t) E+ M E- x.
struct FullRhs {
  const GalerkinOperator& op;
  const PwPoly& u;

  void operator()(const State& x, State& dxdt, double t) const {
    const int n = op.N;
    State minus(n);
    phases(op.lambda, t, minus);
    const double uv = u(t);
    Eigen::Map<const CVec> c(x.data(), n);
    CVec y = rotated_matvec(op.M, minus, c);
    for (int j = 0; j < n; ++j) dxdt[j] = kI * uv * std::conj(minus[j]) * y[j];
  }
};

// Stacked cascade: [c | first | second | third], each layer forced by the one
// below it, the zeroth layer being the constant e1.
struct CascadeRhs {
  const GalerkinOperator& op;
  const PwPoly& u;

  void operator()(const State& x, State& dxdt, double t) const {
    const int n = op.N;
    State minus(n);
    phases(op.lambda, t, minus);
    const double uv = u(t);
    Eigen::Map<const CVec> c(x.data(), n), first(x.data() + n, n), second(x.data() + 2 * n, n);
    CVec e1 = CVec::Zero(n);
    e1[0] = 1.0;
    auto apply = [&](const Eigen::Ref<const CVec>& v, cplx* out) {
      CVec y = rotated_matvec(op.M, minus, v);
      for (int j = 0; j < n; ++j) out[j] = kI * uv * std::conj(minus[j]) * y[j];
    };
    apply(c, dxdt.data());
    apply(e1, dxdt.data() + n);
    apply(first, dxdt.data() + 2 * n);
    apply(second, dxdt.data() + 3 * n);
  }
};

// Stacked auxiliary cascade in the once-integrated control: the drive acts
// through -u1 D (first order) and -i u1^2 S (second order).
struct AuxCascadeRhs {
  const GalerkinOperator& op;
  const PwPoly& u1;

  void operator()(const State& x, State& dxdt, double t) const {
    const int n = op.N;
    State minus(n);
    phases(op.lambda, t, minus);
    const double v1 = u1(t);
    const double v2 = v1 * v1;
    Eigen::Map<const CVec> c(x.data(), n), first(x.data() + n, n), second(x.data() + 2 * n, n);
    CVec e1 = CVec::Zero(n);
    e1[0] = 1.0;
    auto apply = [&](const Eigen::Ref<const CVec>& vd, const Eigen::Ref<const CVec>& vs,
                     cplx* out) {
      CVec yd = rotated_matvec(op.D, minus, vd);
      CVec ys = rotated_matvec(op.S, minus, vs);
      for (int j = 0; j < n; ++j)
        out[j] = std::conj(minus[j]) * (-v1 * yd[j] - kI * v2 * ys[j]);
    };
    apply(c, c, dxdt.data());
    CVec zero = CVec::Zero(n);
    apply(e1, zero, dxdt.data() + n);
    apply(first, e1, dxdt.data() + 2 * n);
    apply(second, first, dxdt.data() + 3 * n);
  }
};

struct ToyRhs {
  ToyModel model;
  const PwPoly& u;

  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double t) const {
    const double uv = u(t);
    switch (model) {
      case ToyModel::drift_direct:
        dxdt[0] = uv;
        dxdt[1] = x[0] * x[0] + x[0] * x[0] * x[0];
        break;
      case ToyModel::drift_integrated:
        dxdt[0] = uv;
        dxdt[1] = x[0];
        dxdt[2] = x[1] * x[1] + x[0] * x[0] * x[0];
        break;
      case ToyModel::drift_competing:
        dxdt[0] = uv;
        dxdt[1] = x[0];
        dxdt[2] = x[1];
        dxdt[3] = x[2] * x[2] + x[0] * x[0] * x[1];
        dxdt[4] = x[3];
        break;
    }
  }
};

State to_state(const CVec& c) { return State(c.data(), c.data() + c.size()); }

CVec slice(const State& x, int n, int block) {
  return Eigen::Map<const CVec>(x.data() + block * n, n);
}

}  // namespace

GalerkinOperator GalerkinOperator::build(const DipoleProfile& mu) {
  Vec lambda(mu.N);
  for (int j = 1; j <= mu.N; ++j) lambda[j - 1] = eigenvalue(j);
  return from_operators(std::move(lambda), coupling_matrix(mu));
}

GalerkinOperator GalerkinOperator::from_operators(Vec lambda, Mat M) {
  GalerkinOperator op;
  op.N = static_cast<int>(lambda.size());
  if (M.rows() != op.N || M.cols() != op.N) throw std::invalid_argument("coupling size mismatch");
  op.lambda = std::move(lambda);
  op.M = std::move(M);
  op.D.resize(op.N, op.N);
  for (int j = 0; j < op.N; ++j)
    for (int n = 0; n < op.N; ++n) op.D(j, n) = (op.lambda[n] - op.lambda[j]) * op.M(j, n);
  Mat L = op.lambda.asDiagonal();
  op.S = -0.5 * (op.M * op.M * L - 2.0 * op.M * L * op.M + L * op.M * op.M);
  return op;
}

CVec evolve(const GalerkinOperator& op, const ControlSignal& u, CVec c0, double t0, double t1,
            const SimOptions& opt) {
  State x = to_state(c0);
  integrate_segments(FullRhs{op, u.u()}, x, t0, t1, u.u().edges(), opt);
  return slice(x, op.N, 0);
}

std::vector<CVec> evolve_path(const GalerkinOperator& op, const ControlSignal& u, CVec c0,
                              double t0, double t1, const std::vector<double>& times,
                              const SimOptions& opt) {
  State x = to_state(c0);
  std::vector<CVec> out;
  out.reserve(times.size());
  double t = t0;
  for (double tr : times) {
    if (tr < t - 1e-15 || tr > t1 + 1e-15) throw std::invalid_argument("record time out of range");
    integrate_segments(FullRhs{op, u.u()}, x, t, std::min(tr, t1), u.u().edges(), opt);
    t = std::min(tr, t1);
    out.push_back(slice(x, op.N, 0));
  }
  return out;
}

CascadeState evolve_cascade(const GalerkinOperator& op, const ControlSignal& u, double t0,
                            double t1, const SimOptions& opt) {
  State x(4 * op.N, cplx(0.0, 0.0));
  x[0] = 1.0;  // full state starts on the first mode; layers start at zero
  integrate_segments(CascadeRhs{op, u.u()}, x, t0, t1, u.u().edges(), opt);
  return CascadeState{slice(x, op.N, 0), slice(x, op.N, 1), slice(x, op.N, 2), slice(x, op.N, 3)};
}

AuxCascadeState evolve_aux_cascade(const GalerkinOperator& op, const ControlSignal& u, double t0,
                                   double t1, const SimOptions& opt) {
  State x(4 * op.N, cplx(0.0, 0.0));
  x[0] = 1.0;
  integrate_segments(AuxCascadeRhs{op, u.primitive(1)}, x, t0, t1, u.primitive(1).edges(), opt);
  return AuxCascadeState{slice(x, op.N, 0), slice(x, op.N, 1), slice(x, op.N, 2),
                         slice(x, op.N, 3)};
}

CVec linear_term_moments(const GalerkinOperator& op, const ControlSignal& u) {
  CVec out(op.N);
  for (int j = 0; j < op.N; ++j)
    out[j] = kI * op.M(j, 0) * u.u().moment(op.lambda[j] - op.lambda[0]);
  return out;
}

CVec aux_linear_term_moments(const GalerkinOperator& op, const ControlSignal& u) {
  CVec out(op.N);
  for (int j = 0; j < op.N; ++j)
    out[j] = (op.lambda[j] - op.lambda[0]) * op.M(j, 0) *
             u.primitive(1).moment(op.lambda[j] - op.lambda[0]);
  return out;
}

CVec gauge_transform(const GalerkinOperator& op, double u1, double t, const CVec& c) {
  Eigen::SelfAdjointEigenSolver<Mat> es(op.M);
  if (es.info() != Eigen::Success) throw std::runtime_error("coupling eigendecomposition failed");
  const Mat& V = es.eigenvectors();
  CVec w(op.N);
  for (int j = 0; j < op.N; ++j) {
    double a = op.lambda[j] * t;
    w[j] = cplx(std::cos(a), -std::sin(a)) * c[j];
  }
  CVec z(op.N);
  z.real() = V.transpose() * w.real();
  z.imag() = V.transpose() * w.imag();
  for (int j = 0; j < op.N; ++j) {
    double a = u1 * es.eigenvalues()[j];
    z[j] *= cplx(std::cos(a), -std::sin(a));
  }
  w.real() = V * z.real();
  w.imag() = V * z.imag();
  for (int j = 0; j < op.N; ++j) {
    double a = op.lambda[j] * t;
    w[j] *= cplx(std::cos(a), std::sin(a));
  }
  return w;
}

Vec toy_final(ToyModel model, const ControlSignal& u, const SimOptions& opt) {
  int dim = model == ToyModel::drift_direct ? 2 : (model == ToyModel::drift_integrated ? 3 : 5);
  std::vector<double> x(dim, 0.0);
  integrate_segments(ToyRhs{model, u.u()}, x, u.t_begin(), u.t_end(), u.u().edges(), opt);
  return Eigen::Map<const Vec>(x.data(), dim);
}

}  // namespace qctrl
