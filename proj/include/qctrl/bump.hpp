#pragma once

#include <array>

namespace qctrl {

inline constexpr int kJetOrder = 12;

// Value and derivatives 0..kJetOrder of a scalar function at one point.
struct Jet {
  std::array<double, kJetOrder + 1> d{};
  double operator[](int n) const { return d[n]; }
  double& operator[](int n) { return d[n]; }
};

double binomial(int n, int k);

Jet jet_constant(double c);
Jet jet_add(const Jet& a, const Jet& b);
Jet jet_scale(const Jet& a, double c);
Jet jet_mul(const Jet& a, const Jet& b);

// Jet at x of sin(omega*x + phase) / cos(omega*x + phase).
Jet jet_sin(double omega, double phase, double x);
Jet jet_cos(double omega, double phase, double x);

// Jet at x of the polynomial sum_m coef[m] x^m, m = 0..deg.
Jet jet_poly(const double* coef, int deg, double x);

// Given the jet of f in the variable y = (x - a)/w, the jet of
// x -> f((x - a)/w): divide the n-th derivative by w^n.
Jet jet_rescale(const Jet& f, double w);

// exp(-1/(y(1-y))) on (0,1), identically zero outside; flat to all orders
// at both support endpoints.
Jet bump_jet(double y);

// sig(y)/(sig(y) + sig(1-y)) with sig(y) = exp(-1/y): rises from 0 to 1 on
// (0,1), flat to all orders at both ends.
Jet smoothstep_jet(double y);

}  // namespace qctrl
