#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qctrl/dipole.hpp"

namespace qctrl {

// Closed interval home for one family of compactly supported atoms.
struct SynthesisInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double a, double b) const { return a >= lo && b <= hi; }
};

// Placement data for the constructive dipole search targeting mode K: a zero
// x_bar of phi_K, a band (x_bar - delta, x_bar + delta) on which phi_1 phi_K
// changes sign exactly at x_bar, a region [0, eta/2] housing the reference
// part, and pairwise disjoint interval homes for every atom family the four
// construction stages use. "plus" homes sit where phi_1 phi_K > 0 (left of
// x_bar for the standard layout), "minus" homes where it is negative.
struct SynthesisGeometry {
  int K = 2;
  int N = 30;
  double x_bar = 0.5;
  double delta = 0.22;
  double eta = 0.4;
  SynthesisInterval osc1_plus, osc1_minus;    // order-1 oscillating bumps
  SynthesisInterval osc2_plus, osc2_minus;    // order-2 oscillating bumps
  SynthesisInterval comp_plus, comp_minus;    // unit-a1, zero-overlap pairs
  SynthesisInterval basis_plus, basis_minus;  // cubic-target atom basis
  SynthesisInterval overlap_home;             // unit-overlap compensator
  SynthesisInterval balanced_left, balanced_right;  // zero-a1 unit-overlap pair

  double ref_support_end() const { return 0.5 * eta; }

  // Layout used by the full pipeline: x_bar = 1/K (first zero of phi_K), all
  // homes placed by fixed fractions of the band and of the outer gaps.
  static SynthesisGeometry standard(int K = 2, int N = 30);

  // Checks the defining invariants: phi_K(x_bar) = 0, sign conditions of
  // phi_1 phi_K on every home, pairwise disjointness, homes inside their
  // regions. Throws std::invalid_argument naming the violated condition.
  void validate() const;
};

enum class SynthesisStage { step1, step2, step3, step4, done };

struct SynthesisOptions {
  std::uint64_t seed = 24601;
  int max_restarts = 40;      // reference-stage random redraws
  double tol_zero = 1e-9;     // vanishing threshold for a1, a2 and the K-overlap
  double tol_nonzero = 1e-6;  // nondegeneracy threshold for a3, c and the floors
  double root_tol = 1e-11;    // residual target for the lambda roots
  double sweep_hi = 1e-1;     // bump-width sweep, geometric grid
  double sweep_lo = 1e-4;
  int sweep_points = 25;
  int max_polish_rounds = 5;  // cross-term re-solves of the lambda roots
  Tolerances verdict_tol{};
};

// Search state threaded through the construction stages.
struct SynthesisState {
  SynthesisGeometry geom;
  SynthesisStage stage = SynthesisStage::step1;
  DipoleProfile mu;          // current reference profile
  double epsilon = 0.0;      // accepted bump width of the last oscillating stage
  double lambda = 0.0;       // accepted drift target of the last oscillating stage
  double q_value = 0.0;      // order-1 drift functional at acceptance
  double q_hat_value = 0.0;  // order-2 drift functional at acceptance
  HypothesisReport report;   // verdicts for mu

  // Atom indices (into mu.atoms) of the re-solvable pieces, -1 when absent:
  // the two oscillating bumps, their overlap compensators, and the pair of
  // atoms forming the unit-a1 compensator of the order-2 stage.
  int osc1_index = -1, overlap1_index = -1;
  int osc2_index = -1, overlap2_index[2] = {-1, -1}, comp_index[2] = {-1, -1};
  double eps1 = 0.0, lambda1 = 0.0;  // accepted order-1 stage parameters
  double eps2 = 0.0, lambda2 = 0.0;  // accepted order-2 stage parameters
};

struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oscillating atom of width eps on the side selected by sign(lambda), scaled
// so the order-p drift coefficient approaches lambda as eps -> 0:
//   order 1: amp = sqrt(eps |lambda| / |phi_1 phi_K(x0)|), profile normalized
//            to unit integral of its squared slope;
//   order 2: amp = eps^{5/2} sqrt(|lambda| / |phi_1 phi_K(x0)|), profile
//            normalized to unit integral of its squared third derivative.
// Throws std::invalid_argument when the support (x0, x0 + eps) leaves the
// home interval.
DipoleAtom build_oscillating_bump(const SynthesisGeometry& g, double eps, double lambda,
                                  int order);

// Root of q on [lo, hi] by bracketing (TOMS 748) with a secant polish;
// guarantees |q(root)| < tol. Throws std::invalid_argument when
// q(lo) q(hi) > 0 and std::runtime_error when the residual target fails.
double solve_lambda(const std::function<double(double)>& q, double lo, double hi,
                    double tol = 1e-10);

// Reference profile supported on [0, eta/2]: an edge atom pinning a nonzero
// fifth wall derivative (hence nonvanishing j^{-7} coupling floors), random
// interior bumps, and an exact projection removing the K-overlap. Accepts the
// first draw whose floors and cubic coefficient clear their thresholds.
SynthesisState step1_reference(const SynthesisGeometry& g, std::uint64_t seed,
                               const SynthesisOptions& opt = {});

// Width sweep + lambda root driving a1 to zero while keeping every
// nonvanishing verdict (floors, cubic coefficient) intact.
SynthesisState step2_kill_a1(SynthesisState s, const SynthesisOptions& opt = {});

// Same for a2, using the fifth-power-width oscillating bump, a zero-a1
// unit-overlap compensator pair, and unit-a1 correctors.
SynthesisState step3_kill_a2(SynthesisState s, const SynthesisOptions& opt = {});

// If a3 is degenerate, adds a scaled copy of the unit cubic basis (below),
// choosing the scale by a sign-and-magnitude sweep so every other verdict
// survives.
SynthesisState step4_set_a3(SynthesisState s, const SynthesisOptions& opt = {});

// Lambda root of the order-1 (order 2) drift functional for a bump of width
// eps inserted on top of the state's profile -- the quantity the width-sweep
// stages drive to zero. Used to probe continuity of eps -> lambda(eps).
double step2_lambda_root(const SynthesisState& s, double eps, const SynthesisOptions& opt = {});

// Atom set on the basis homes with zero K-overlap, zero a1, zero a2 and
// a3 = 1 at truncation N: Newton over six (on retry eight) bump amplitudes
// with least-norm steps. Residual targets: 1e-12 on the zeros, 1e-10 on the
// normalization.
std::vector<DipoleAtom> cubic_unit_basis(const SynthesisGeometry& g);

// Full pipeline: stages 1-4, a cross-term polish loop re-solving the two
// lambda roots on the assembled profile until both quadratic coefficients
// vanish simultaneously at truncation N, and a final rescale putting |c|
// near 1 while preserving the floors. The returned profile passes
// check_hypotheses at the option tolerances.
SynthesisState synthesize_profile(int K, const SynthesisOptions& opt = {});

}  // namespace qctrl
