#pragma once

#include <string>
#include <vector>

#include "qctrl/bump.hpp"
#include "qctrl/constants.hpp"
#include "qctrl/quadrature.hpp"
#include "qctrl/spectral.hpp"

namespace qctrl {

// One building block of a dipole profile.
//
// interior:   amp * P(y) * bump(y),        y = (x - pos)/width
// edge_left:  amp * (y^5 modulated) * fade(y), flat-1 fade at the wall, so
//             the fifth derivative at x = 0 is exactly 120*amp*poly[5]/w^5
//             while derivatives 0..4 vanish
// edge_right: mirror image at x = 1
//
// Edge atoms are the only pieces that feed the universal j^{-7} coupling
// tail; interior bumps decay faster than any power.
struct DipoleAtom {
  enum class Kind { interior, edge_left, edge_right };
  Kind kind = Kind::interior;
  double pos = 0.0;    // left support edge (interior); ignored for edge atoms
  double width = 0.1;  // support length
  double amp = 0.0;
  std::vector<double> poly = {1.0};  // modulation in the local variable y

  double value(double x) const;
  Jet jet(double x) const;  // derivatives in x up to kJetOrder
};

struct TrigTerm {
  int m = 1;  // cos(m pi x), or sin(m pi x) when sine is set
  double c = 0.0;
  bool sine = false;
};

// Dipole profile mu(x) = atoms + banded cosine part, with the spectral
// truncation order it is meant to be used at.
struct DipoleProfile {
  int N = 30;
  std::vector<DipoleAtom> atoms;
  std::vector<TrigTerm> trig;

  double value(double x) const;
  Jet jet(double x) const;
  double derivative(double x, int order) const;

  // Quadrature panel edges refined around every atom support.
  std::vector<double> panel_edges() const;
};

// d^order/dx^order mu at the wall (x = 0 or x = 1).
double wall_derivative(const DipoleProfile& mu, int order, bool right_wall);

// <mu phi_q, phi_j> for j = 1..N (0-based [j-1]), and a single entry.
Vec coeff_row(const DipoleProfile& mu, int q);
double coeff(const DipoleProfile& mu, int q, int j);

// Large-j model of the coupling coefficient from the wall traces:
// 12 q / (pi^6 j^7) * ((-1)^{j+q} mu^(5)(1) - mu^(5)(0)).
double coeff_tail_model(const DipoleProfile& mu, int q, int j);

// <mu'^2 phi_q, phi_j> row, and the full matrices in the sine basis.
Vec squared_slope_row(const DipoleProfile& mu, int q);
Mat coupling_matrix(const DipoleProfile& mu);       // M_{jn} = <mu phi_n, phi_j>
Mat derivative_matrix(const Mat& M);                // commutator form: (lam_n - lam_j) M_{jn}
Mat derivative_matrix_quadrature(const DipoleProfile& mu);  // <2 mu' phi_n' + mu'' phi_n, phi_j>
Mat squared_slope_matrix(const DipoleProfile& mu);  // <mu'^2 phi_n, phi_j>
Mat squared_slope_matrix_commutator(const Mat& M);  // -(M^2 L - 2 M L M + L M^2)/2

// Obstruction coefficients for steering mode K at truncation N:
//   ak[p] = (-1)^{p-1} sum_j (lam_j - (lam_1+lam_K)/2) (lam_K - lam_j)^{p-1}
//                         (lam_j - lam_1)^{p-1} <mu phi_1, phi_j><mu phi_K, phi_j>
//   c     = sum_j (lam_1 - lam_j) <mu phi_1,phi_j><mu'^2 phi_K,phi_j>
//         - sum_j (lam_j - lam_K) <mu phi_j,phi_K><mu'^2 phi_1,phi_j>
// together with the closed-form cross-checks that do not go through the
// spectral series.
struct DriftCoefficients {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double c = 0.0;
  double a1_bracket = 0.0;  // <mu'^2 phi_1, phi_K>
  double c_bracket = 0.0;   // -4 <mu'^2 mu'' phi_1, phi_K>
};
DriftCoefficients drift_coefficients(const DipoleProfile& mu, int K);

// The ak[p] series evaluated on externally assembled coupling rows
// (c1[j-1] = <mu phi_1, phi_j>, cK[j-1] = <mu phi_K, phi_j>), and its
// polarization: cross(a, b) = series(a + b) - series(a) - series(b).
// Rows are linear in mu, so amplitude combinations of precomputed per-atom
// rows give the series of the combined profile without requadrature.
double drift_series_from_rows(const Vec& c1, const Vec& cK, int K, int Ncut, int p);
double drift_series_cross(const Vec& c1a, const Vec& cKa, const Vec& c1b, const Vec& cKb, int K,
                          int Ncut, int p);

// Richardson estimate of the truncated part of one of the drift series
// (which: 1 -> a1, 2 -> a2, 3 -> a3, 0 -> c) from partial sums at
// N-6, N-3, N. reliable=false when the tail ratio does not contract.
struct TailEstimate {
  double bound = 0.0;
  bool reliable = false;
};
TailEstimate drift_series_tail(const DipoleProfile& mu, int K, int which);

// Structural requirements on the profile for steering mode K.
struct HypothesisReport {
  int K = 0;
  double wall[4] = {0, 0, 0, 0};  // |mu'(0)|, |mu'(1)|, |mu'''(0)|, |mu'''(1)|
  double c1K = 0.0;               // <mu phi_1, phi_K>, must vanish
  double min_floor = 0.0;         // min_{j != K} j^7 |<mu phi_1, phi_j>|
  int floor_argmin = 0;
  DriftCoefficients drift;
  bool regularity_ok = false;
  bool linear_ok = false;     // c1K ~ 0 and floors clear
  bool quadratic_ok = false;  // a1 ~ a2 ~ 0, a3 bounded away from zero
  bool cubic_ok = false;      // c bounded away from zero
  bool all_ok() const { return regularity_ok && linear_ok && quadratic_ok && cubic_ok; }
};
HypothesisReport check_hypotheses(const DipoleProfile& mu, int K, const Tolerances& tol = {});

// Serialization (schema: {"N":..,"atoms":[..],"trig":[..]}).
std::string profile_to_json(const DipoleProfile& mu);
DipoleProfile profile_from_json(const std::string& text);
void save_profile(const DipoleProfile& mu, const std::string& path);
DipoleProfile load_profile(const std::string& path);

}  // namespace qctrl
