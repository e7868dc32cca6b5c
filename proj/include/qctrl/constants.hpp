#pragma once

#include <complex>

namespace qctrl {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

// Dirichlet Laplacian eigenvalue on (0,1) for mode j >= 1.
inline double eigenvalue(int j) { return (j * kPi) * (j * kPi); }

struct Tolerances {
  double zero = 1e-9;     // magnitude below which a coefficient counts as vanishing
  double nonzero = 1e-6;  // magnitude above which a coefficient counts as nondegenerate
  double ode = 1e-12;     // relative/absolute tolerance for adaptive integration
};

}  // namespace qctrl
