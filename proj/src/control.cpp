#include "qctrl/control.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "qctrl/constants.hpp"
#include "qctrl/quadrature.hpp"

namespace qctrl {

Jet profile_jet(double y) {
  Jet e = bump_jet(y);
  Jet s = jet_sin(4.0 * kPi, 0.0, y);
  return jet_scale(jet_mul(e, s), 4.0);
}

namespace {

const QuadRule& profile_rule() {
  static QuadRule r = gl_panels(uniform_edges(0.0, 1.0, 16), 64);
  return r;
}

}  // namespace

double profile_norm(int order, double p) {
  if (order < 0 || order > kJetOrder) throw std::invalid_argument("profile_norm: bad order");
  if (std::isinf(p)) {
    double mx = 0.0;
    const int n = 4096;
    for (int i = 0; i <= n; ++i) mx = std::max(mx, std::abs(profile_jet(double(i) / n)[order]));
    return mx;
  }
  double acc = profile_rule().integrate(
      [&](double y) { return std::pow(std::abs(profile_jet(y)[order]), p); });
  return std::pow(acc, 1.0 / p);
}

double profile_gain_first() {
  static double v = profile_rule().integrate([](double y) {
    Jet j = profile_jet(y);
    return j[1] * j[1] * j[1];
  });
  return v;
}

double profile_gain_second() {
  static double v = profile_rule().integrate([](double y) {
    Jet j = profile_jet(y);
    return j[2] * j[2] * j[1];
  });
  return v;
}

ControlSignal::ControlSignal(PwPoly u) : u_(std::move(u)) {}

ControlSignal ControlSignal::zero(double t0, double T) {
  return ControlSignal(PwPoly::zero(t0, T));
}

ControlSignal ControlSignal::from_function(double t0, double T, int cells,
                                           const std::function<double(double)>& f) {
  std::vector<double> g(cells + 1), v(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    g[i] = t0 + (T - t0) * i / cells;
    v[i] = f(g[i]);
  }
  return ControlSignal(PwPoly::from_samples(g, v));
}

ControlSignal ControlSignal::pulse(const Pulse& p, int cells) {
  std::vector<double> g(cells + 1), v(cells + 1), s(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    double y = double(i) / cells;
    g[i] = p.start + p.width * y;
    Jet j = profile_jet(y);
    v[i] = p.amp * j[p.deriv];
    s[i] = p.amp * j[p.deriv + 1] / p.width;  // d/dt = (1/width) d/dy
  }
  ControlSignal c(PwPoly::from_hermite(g, v, s));
  c.pulse_ = p;
  return c;
}

ControlSignal ControlSignal::concat(const ControlSignal& a, const ControlSignal& b) {
  return ControlSignal(PwPoly::join(a.u_, b.u_));
}

const PwPoly& ControlSignal::primitive(int n) const {
  if (n < 1) throw std::invalid_argument("primitive: n must be >= 1");
  while (static_cast<int>(prims_.size()) < n) {
    const PwPoly& prev = prims_.empty() ? u_ : prims_.back();
    prims_.push_back(prev.antiderivative());
  }
  return prims_[n - 1];
}

double ControlSignal::weak_norm(int k) const {
  if (k < 1) throw std::invalid_argument("weak_norm: order must be >= 1");
  double u1T = primitive(1)(t_end());
  return std::abs(u1T) + primitive(k).l2_norm();
}

double ControlSignal::seminorm(int k, double p) const {
  if (pulse_) {
    // amp * width^{-k} * profile^{(deriv + k)} rescaled to width support:
    // L^p picks up width^{1/p}.
    const Pulse& q = *pulse_;
    int order = q.deriv + k;
    if (order >= 0 && order <= kJetOrder) {
      double wp = std::isinf(p) ? 1.0 : std::pow(q.width, 1.0 / p);
      return std::abs(q.amp) * std::pow(q.width, -double(k)) * wp * profile_norm(order, p);
    }
    // fall through to the sampled path when the profile order is exhausted
  }
  const PwPoly* f = nullptr;
  PwPoly tmp;
  if (k == 0) {
    f = &u_;
  } else if (k < 0) {
    f = &primitive(-k);
  } else {
    tmp = u_;
    for (int i = 0; i < k; ++i) tmp = tmp.derivative();
    f = &tmp;
  }
  if (std::isinf(p)) return f->sup_norm();
  if (p == 2.0) return f->l2_norm();
  return f->lp_norm(p);
}

ControlSignal ControlSignal::plus(const ControlSignal& o) const {
  return ControlSignal(u_.plus(o.u_));
}

ControlSignal ControlSignal::scaled(double c) const {
  ControlSignal out(u_.scaled(c));
  if (pulse_) {
    Pulse p = *pulse_;
    p.amp *= c;
    out.pulse_ = p;
  }
  return out;
}

}  // namespace qctrl
