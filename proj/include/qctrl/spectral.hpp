#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "qctrl/constants.hpp"

namespace qctrl {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

// Dirichlet sine basis on (0,1): phi_j(x) = sqrt(2) sin(j pi x), j >= 1.
inline double phi(int j, double x) { return std::sqrt(2.0) * std::sin(j * kPi * x); }
inline double phi_prime(int j, double x) {
  return std::sqrt(2.0) * j * kPi * std::cos(j * kPi * x);
}

// (sum_j |j^s c_j|^2)^(1/2); c is indexed from mode 1.
inline double sobolev_norm(const CVec& c, double s) {
  double acc = 0.0;
  for (int j = 0; j < c.size(); ++j) {
    double w = std::pow(static_cast<double>(j + 1), s);
    acc += std::norm(w * c[j]);
  }
  return std::sqrt(acc);
}

// Free flow of mode coefficients over time t: c_j -> e^{-i lam_j t} c_j.
inline CVec free_evolve(const CVec& c, double t) {
  CVec out(c.size());
  for (int j = 0; j < c.size(); ++j) out[j] = std::exp(cplx(0.0, -eigenvalue(j + 1) * t)) * c[j];
  return out;
}

// Coefficient vector of the ground mode at time t in the fixed sine basis.
inline CVec ground_state(int N, double t) {
  CVec c = CVec::Zero(N);
  c[0] = std::exp(cplx(0.0, -eigenvalue(1) * t));
  return c;
}

}  // namespace qctrl
