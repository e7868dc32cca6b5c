#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "qctrl/bump.hpp"
#include "qctrl/pwpoly.hpp"

namespace qctrl {

// Canonical pulse profile: a compactly supported C-infinity shape on (0,1)
// whose odd part is strong enough that its cubed slope and the square of its
// curvature both integrate to nonzero values. All pulse families below are
// amplitude/width rescalings of derivatives of this one shape.
Jet profile_jet(double y);

// L^p norm of profile^{(order)} over (0,1); p = infinity is accepted.
double profile_norm(int order, double p);

// int_0^1 (profile')^3 dy and int_0^1 (profile'')^2 profile' dy; the two
// normalizers used by the drift-recovery pulse families.
double profile_gain_first();
double profile_gain_second();

// amp * profile^{(deriv)}((t - start)/width) on [start, start + width].
struct Pulse {
  double amp = 0.0;
  double start = 0.0;
  double width = 1.0;
  int deriv = 0;
};

// A control on [t_begin, t_end]: a piecewise polynomial with cached
// primitives u_1, u_2, ... (each vanishing at t_begin) and, for pulses,
// the analytic scaling data used for exact Sobolev seminorms.
class ControlSignal {
 public:
  ControlSignal() = default;
  explicit ControlSignal(PwPoly u);

  static ControlSignal zero(double t0, double T);
  static ControlSignal from_function(double t0, double T, int cells,
                                     const std::function<double(double)>& f);
  // Cubic sampling of the pulse from exact profile jets; cells counts
  // sampling intervals across the pulse support.
  static ControlSignal pulse(const Pulse& p, int cells = 1024);
  // a followed by b (b may start where a ends); primitives restart from the
  // combined origin.
  static ControlSignal concat(const ControlSignal& a, const ControlSignal& b);

  const PwPoly& u() const { return u_; }
  const PwPoly& primitive(int n) const;  // n >= 1
  double t_begin() const { return u_.t_begin(); }
  double t_end() const { return u_.t_end(); }
  double duration() const { return t_end() - t_begin(); }

  // |u_1(T)| + L2 norm of the k-th primitive: the weak norm of order -k.
  double weak_norm(int k) const;

  // L^p seminorm of the k-th derivative (k >= 0) or the |k|-th primitive
  // (k < 0). Pulses use the analytic profile scaling (exact for any k the
  // profile supports); sampled signals fall back to the piecewise data,
  // which is reliable for k <= 1 only.
  double seminorm(int k, double p) const;

  ControlSignal plus(const ControlSignal& o) const;
  ControlSignal scaled(double c) const;

  bool is_pulse() const { return pulse_.has_value(); }
  const Pulse& pulse_spec() const { return *pulse_; }

 private:
  PwPoly u_;
  std::optional<Pulse> pulse_;
  // deque: growth never invalidates references handed out by primitive()
  mutable std::deque<PwPoly> prims_;  // prims_[n-1] = n-th primitive
};

}  // namespace qctrl
