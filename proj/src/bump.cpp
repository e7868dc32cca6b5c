#include "qctrl/bump.hpp"

#include <cmath>

namespace qctrl {

namespace {

struct BinomialTable {
  double c[kJetOrder + 1][kJetOrder + 1] = {};
  BinomialTable() {
    for (int n = 0; n <= kJetOrder; ++n) {
      c[n][0] = 1.0;
      for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0.0);
    }
  }
};
const BinomialTable kBinom;

// Jet of exp(g) from the jet of g via E' = g' E.
void exp_jet(const std::array<double, kJetOrder + 1>& g, std::array<double, kJetOrder + 1>& e) {
  e.fill(0.0);
  if (g[0] < -744.0) return;  // exp underflows; the whole jet is numerically zero
  e[0] = std::exp(g[0]);
  for (int n = 0; n < kJetOrder; ++n) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) s += kBinom.c[n][k] * g[k + 1] * e[n - k];
    e[n + 1] = s;
  }
}

// Jet of exp(-1/y) for y > 0.
void sigma_jet(double y, std::array<double, kJetOrder + 1>& s) {
  std::array<double, kJetOrder + 1> g{};
  double fact = 1.0;
  double pw = 1.0 / y;  // y^{-(n+1)}
  double sign = 1.0;    // (-1)^n
  for (int n = 0; n <= kJetOrder; ++n) {
    g[n] = -sign * fact * pw;
    pw /= y;
    sign = -sign;
    fact *= (n + 1);
  }
  exp_jet(g, s);
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n || n < 0 || n > kJetOrder) return 0.0;
  return kBinom.c[n][k];
}

Jet jet_constant(double c) {
  Jet j;
  j.d[0] = c;
  return j;
}

Jet jet_add(const Jet& a, const Jet& b) {
  Jet r;
  for (int n = 0; n <= kJetOrder; ++n) r.d[n] = a.d[n] + b.d[n];
  return r;
}

Jet jet_scale(const Jet& a, double c) {
  Jet r;
  for (int n = 0; n <= kJetOrder; ++n) r.d[n] = c * a.d[n];
  return r;
}

Jet jet_mul(const Jet& a, const Jet& b) {
  Jet r;
  for (int n = 0; n <= kJetOrder; ++n) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) s += kBinom.c[n][k] * a.d[k] * b.d[n - k];
    r.d[n] = s;
  }
  return r;
}

Jet jet_sin(double omega, double phase, double x) {
  Jet r;
  double pw = 1.0;
  const double half_pi = 1.5707963267948966;
  for (int n = 0; n <= kJetOrder; ++n) {
    r.d[n] = pw * std::sin(omega * x + phase + n * half_pi);
    pw *= omega;
  }
  return r;
}

Jet jet_cos(double omega, double phase, double x) {
  return jet_sin(omega, phase + 1.5707963267948966, x);
}

Jet jet_poly(const double* coef, int deg, double x) {
  Jet r;
  for (int n = 0; n <= kJetOrder && n <= deg; ++n) {
    // Horner for the n-th derivative: coefficients coef[m] * m!/(m-n)!
    double s = 0.0;
    for (int m = deg; m >= n; --m) {
      double f = 1.0;
      for (int i = 0; i < n; ++i) f *= (m - i);
      s = s * x + coef[m] * f;
    }
    r.d[n] = s;
  }
  return r;
}

Jet jet_rescale(const Jet& f, double w) {
  Jet r;
  double pw = 1.0;
  for (int n = 0; n <= kJetOrder; ++n) {
    r.d[n] = f.d[n] / pw;
    pw *= w;
  }
  return r;
}

Jet bump_jet(double y) {
  Jet E;
  if (!(y > 0.0 && y < 1.0)) return E;
  // h(y) = -1/y - 1/(1-y); h^{(n)} = -((-1)^n n! y^{-n-1} + n! (1-y)^{-n-1})
  std::array<double, kJetOrder + 1> h{};
  const double q = 1.0 - y;
  double fact = 1.0;
  double py = 1.0 / y, pq = 1.0 / q;
  double sign = 1.0;
  for (int n = 0; n <= kJetOrder; ++n) {
    h[n] = -fact * (sign * py + pq);
    py /= y;
    pq /= q;
    sign = -sign;
    fact *= (n + 1);
  }
  std::array<double, kJetOrder + 1> e{};
  exp_jet(h, e);
  for (int n = 0; n <= kJetOrder; ++n) E.d[n] = e[n];
  return E;
}

Jet smoothstep_jet(double y) {
  if (y <= 0.0) return Jet{};
  if (y >= 1.0) return jet_constant(1.0);
  std::array<double, kJetOrder + 1> a{}, b{};
  sigma_jet(y, a);
  sigma_jet(1.0 - y, b);
  // denominator D(y) = sig(y) + sig(1-y); reflection flips odd derivatives
  std::array<double, kJetOrder + 1> D{};
  double sign = 1.0;
  for (int n = 0; n <= kJetOrder; ++n) {
    D[n] = a[n] + sign * b[n];
    sign = -sign;
  }
  // reciprocal jet R = 1/D from sum_k C(n,k) R[k] D[n-k] = 0 for n >= 1
  std::array<double, kJetOrder + 1> R{};
  R[0] = 1.0 / D[0];
  for (int n = 1; n <= kJetOrder; ++n) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += kBinom.c[n][k] * R[k] * D[n - k];
    R[n] = -R[0] * s;
  }
  Jet S;
  for (int n = 0; n <= kJetOrder; ++n) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) s += kBinom.c[n][k] * a[k] * R[n - k];
    S.d[n] = s;
  }
  return S;
}

}  // namespace qctrl
