#pragma once

#include <vector>

#include "qctrl/constants.hpp"

namespace qctrl {

// Piecewise polynomial on a cell grid. On cell k with edges (t_k, t_{k+1}),
// width h_k, the value is sum_m coef[k][m] * xi^m with xi = (t - t_k)/h_k.
// The scaled local variable keeps coefficient magnitudes comparable to the
// function values, which the oscillatory quadratures below rely on.
class PwPoly {
 public:
  PwPoly() = default;

  // Piecewise-linear interpolant of samples on the grid.
  static PwPoly from_samples(const std::vector<double>& grid, const std::vector<double>& values);
  // Piecewise-cubic Hermite interpolant of values and slopes on the grid.
  static PwPoly from_hermite(const std::vector<double>& grid, const std::vector<double>& values,
                             const std::vector<double>& slopes);
  static PwPoly zero(double a, double b);
  static PwPoly constant(double a, double b, double c);

  int cells() const { return static_cast<int>(width_.size()); }
  int degree() const;
  double t_begin() const { return edges_.front(); }
  double t_end() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }

  double operator()(double t) const;
  double cell_value(int k, double xi) const;

  PwPoly antiderivative() const;  // vanishes at t_begin, continuous across cells
  PwPoly derivative() const;
  PwPoly plus(const PwPoly& o) const;
  PwPoly times(const PwPoly& o) const;
  PwPoly scaled(double c) const;
  PwPoly times_t() const;  // multiply by the absolute time variable

  // Exact re-expansion on a refinement; new_edges must contain every old edge.
  PwPoly on_grid(const std::vector<double>& new_edges) const;
  // Split cells until max |omega| * h <= bound for the given frequency scale.
  PwPoly refined_for_frequency(double omega_max, double bound = 4.0) const;

  double integral() const;
  double l2_inner(const PwPoly& o) const;  // exact
  double l2_norm() const;
  double lp_norm(double p) const;  // per-cell Gauss quadrature of |.|^p
  double sup_norm() const;         // dense per-cell sampling

  // int p(t) e^{i omega t} dt with the absolute-time phase.
  cplx moment(double omega) const;

  const std::vector<double>& cell_coef(int k) const { return coef_[k]; }
  double cell_width(int k) const { return width_[k]; }

  // Concatenate two pieces whose supports meet end-to-start.
  static PwPoly join(const PwPoly& a, const PwPoly& b);

 private:
  std::vector<double> edges_;               // cells()+1 entries
  std::vector<double> width_;               // per cell
  std::vector<std::vector<double>> coef_;   // per cell, scaled-local monomials
  friend PwPoly merge_like(const PwPoly& a, const PwPoly& b, bool product);
};

// Ordered oscillatory integrals over the common support [t0, T] of the
// amplitudes (grids must coincide; refine first if needed):
//   ordered_double:  int_{t0<s<t<T} p(t) q(s) e^{i(a t + b s)} ds dt
//   ordered_triple:  int_{t0<r<s<t<T} p(t) q(s) w(r) e^{i(a t + b s + c r)}
// Each cell must satisfy |a| h <= ~4 per participating frequency; the
// kernel-facing callers refine grids up front so this holds.
cplx ordered_double(const PwPoly& p, const PwPoly& q, double a, double b);
cplx ordered_triple(const PwPoly& p, const PwPoly& q, const PwPoly& w, double a, double b,
                    double c);

}  // namespace qctrl
