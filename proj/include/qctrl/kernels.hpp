#pragma once

#include "qctrl/control.hpp"
#include "qctrl/dipole.hpp"
#include "qctrl/simulate.hpp"

namespace qctrl {

// Which pairing supplies the slope-squared rows of the cubic kernels.
// The commutator rows are consistent with the truncated cascade dynamics, so
// kernel integrals reproduce the integrated layers exactly at truncation; the
// quadrature rows are the direct inner products, for which the closed-form
// difference identity cubic1(0,0) - cubic2(0,0) = C holds exactly.
enum class SlopeEntries { commutator, quadrature };

// Oscillatory kernel series for one mode: the quadratic kernel with its
// partial derivatives, and the three cubic kernels. Immutable after
// construction; all evaluators are pure.
class KernelSet {
 public:
  KernelSet(const GalerkinOperator& op, int mode, SlopeEntries entries = SlopeEntries::commutator,
            const DipoleProfile* mu = nullptr);
  KernelSet(const DipoleProfile& mu, int mode, SlopeEntries entries = SlopeEntries::commutator);

  int mode() const { return j_; }
  int truncation() const { return N_; }
  // quadratic-drift series coefficients along this mode
  double a1() const { return a_[0]; }
  double a2() const { return a_[1]; }
  double a3() const { return a_[2]; }
  double gap() const { return lambda_[j_ - 1] - lambda_[0]; }

  // k(tau, s) = sum_n (l1 - ln)(ln - lj) <mu p1, pn><mu pn, pj> e^{i(an tau + bn s)}
  // with an = lj - ln, bn = ln - l1.
  cplx quad(double tau, double s) const;
  // d^da/d tau^da d^db/d s^db of the above, da, db <= 2, term by term.
  cplx quad_partial(int da, int db, double tau, double s) const;
  cplx cubic1(double t, double tau) const;
  cplx cubic2(double t, double tau) const;
  cplx cubic3(double t, double tau, double s) const;

 private:
  friend cplx quad_term_direct(const KernelSet&, const ControlSignal&, bool);
  friend cplx quad_term_ipp(const KernelSet&, const ControlSignal&, bool);
  friend cplx cubic_term_kernels(const KernelSet&, const ControlSignal&, bool);

  int j_ = 1, N_ = 0;
  Vec lambda_;
  Vec c1_, cj_;  // coupling rows <mu p1, pn>, <mu pj, pn>
  Vec s1_, sj_;  // slope rows <mu'^2 p1, pn>, <mu'^2 pj, pn> (per entry source)
  Mat M_;        // full coupling, for the doubly-nested cubic kernel
  double a_[3] = {0.0, 0.0, 0.0};
};

// Quadratic layer along the kernel-set mode, two equivalent closed forms:
//   direct: -i a1 int u1^2 e^{i gap t} dt + int_{s<t} u1(t) u1(s) quad(t, s)
//   ipp:    -i sum_p a_p int u_p^2 e^{i gap t} dt
//             + int_{s<t} u3(t) u3(s) [d1^2 d2^2 quad](t, s)
// The ipp form requires u2(T) = u3(T) = 0 and throws otherwise. `parallel`
// switches the blocked OpenMP sum; both settings are bit-identical.
cplx quad_term_direct(const KernelSet& ks, const ControlSignal& u, bool parallel = true);
cplx quad_term_ipp(const KernelSet& ks, const ControlSignal& u, bool parallel = true);

// Cubic layer along the kernel-set mode:
//   i int_{tau<t} u1^2(t) u1(tau) cubic1 + i int_{tau<t} u1(t) u1^2(tau) cubic2
//     - int_{s<tau<t} u1 u1 u1 cubic3.
cplx cubic_term_kernels(const KernelSet& ks, const ControlSignal& u, bool parallel = true);

// Leading heuristic value along a mode with drift data (a3, c):
//   -i a3 int u3^2 dt + i c int u1^2 u2 dt   (no phase factors).
cplx heuristic_leading(const ControlSignal& u, double a3, double c);

// Right-hand side of the non-overlapping evolution estimate for a control on
// [0, T2] whose primitives u1, u2, u3 vanish at T1 and u2, u3 also at T2:
//   |u3|_{L2}^2 + |u1|_{L2}^2 |u2|_{L1} + |u1|_{L1}^3
//     + |u1|_{L2(T1,T2)}^2 |u1|_{L1} + |u2|_{Loo(T1,T2)} |u1|_{L2}^2.
// Throws if the boundary preconditions fail.
double non_overlap_delta(const ControlSignal& u, double t1);

// Structurally independent evaluation of the direct quadratic form: kernel
// values precomputed on a tensor grid with bicubic interpolation, the ordered
// double integral by iterated trapezoid with one Richardson step. Intended
// for small-bandwidth operators (cost grows with frequency x duration).
cplx quad_term_direct_tabulated(const KernelSet& ks, const ControlSignal& u, int kernel_grid = 128,
                                int quad_steps = 1024);

}  // namespace qctrl
