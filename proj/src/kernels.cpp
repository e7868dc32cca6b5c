#include "qctrl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qctrl/quadrature.hpp"

namespace qctrl {
namespace {

// p-th obstruction coefficient along `mode` for an arbitrary spectrum, from
// the coupling rows of the ground and target modes.
double mode_series(const Vec& lambda, const Vec& c1, const Vec& cj, int mode, int p) {
  const int n_modes = static_cast<int>(lambda.size());
  const double half = 0.5 * (lambda(0) + lambda(mode - 1));
  double s = 0.0;
  for (int n = 0; n < n_modes; ++n) {
    double term = (lambda(n) - half) * c1(n) * cj(n);
    for (int r = 1; r < p; ++r) term *= (lambda(mode - 1) - lambda(n)) * (lambda(n) - lambda(0));
    s += term;
  }
  return (p % 2 == 0) ? -s : s;
}

// Deterministic blocked reduction: each summand belongs to a fixed block,
// blocks combine in index order, so the result is bit-identical for any
// thread count and for the serial path.
template <class Term>
cplx blocked_sum(int count, bool parallel, const Term& term) {
  constexpr int kBlock = 4;
  const int blocks = (count + kBlock - 1) / kBlock;
  std::vector<cplx> partial(static_cast<std::size_t>(blocks), cplx(0.0, 0.0));
#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < blocks; ++b) {
    cplx s(0.0, 0.0);
    const int hi = std::min(count, (b + 1) * kBlock);
    for (int i = b * kBlock; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  cplx total(0.0, 0.0);
  for (const cplx& s : partial) total += s;
  return total;
}

// (i w)^k for k = 0, 1, 2.
cplx iw_pow(double w, int k) {
  switch (k) {
    case 0:
      return cplx(1.0, 0.0);
    case 1:
      return cplx(0.0, w);
    default:
      return cplx(-w * w, 0.0);
  }
}

std::vector<double> clipped_edges(const PwPoly& p, double a, double b) {
  std::vector<double> e{a, b};
  for (double t : p.edges())
    if (t > a && t < b) e.push_back(t);
  return merge_edges(std::move(e));
}

double windowed_l2sq(const PwPoly& p, double a, double b) {
  if (b <= a) return 0.0;
  const QuadRule rule = gl_panels(clipped_edges(p, a, b), 8);
  return rule.integrate([&](double t) {
    const double v = p(t);
    return v * v;
  });
}

double windowed_sup(const PwPoly& p, double a, double b) {
  if (b <= a) return 0.0;
  const std::vector<double> e = clipped_edges(p, a, b);
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    for (int i = 0; i <= 32; ++i) {
      const double t = e[k] + (e[k + 1] - e[k]) * (i / 32.0);
      m = std::max(m, std::abs(p(t)));
    }
  return m;
}

}  // namespace

KernelSet::KernelSet(const GalerkinOperator& op, int mode, SlopeEntries entries,
                     const DipoleProfile* mu)
    : j_(mode), N_(op.N), lambda_(op.lambda), M_(op.M) {
  if (mode < 1 || mode > op.N) throw std::invalid_argument("kernel mode outside the truncation");
  c1_ = M_.col(0);
  cj_ = M_.row(j_ - 1).transpose();
  if (entries == SlopeEntries::quadrature) {
    if (mu == nullptr)
      throw std::invalid_argument("quadrature slope entries need the dipole profile");
    s1_ = squared_slope_row(*mu, 1);
    sj_ = squared_slope_row(*mu, j_);
  } else {
    s1_ = op.S.col(0);
    sj_ = op.S.row(j_ - 1).transpose();
  }
  for (int p = 1; p <= 3; ++p) a_[p - 1] = mode_series(lambda_, c1_, cj_, j_, p);
}

KernelSet::KernelSet(const DipoleProfile& mu, int mode, SlopeEntries entries)
    : KernelSet(GalerkinOperator::build(mu), mode, entries, &mu) {}

cplx KernelSet::quad(double tau, double s) const { return quad_partial(0, 0, tau, s); }

cplx KernelSet::quad_partial(int da, int db, double tau, double s) const {
  const double l1 = lambda_(0), lj = lambda_(j_ - 1);
  cplx acc(0.0, 0.0);
  for (int n = 0; n < N_; ++n) {
    const double g = (l1 - lambda_(n)) * (lambda_(n) - lj) * c1_(n) * cj_(n);
    if (g == 0.0) continue;
    const double a = lj - lambda_(n), b = lambda_(n) - l1;
    acc += g * iw_pow(a, da) * iw_pow(b, db) * std::exp(kI * (a * tau + b * s));
  }
  return acc;
}

cplx KernelSet::cubic1(double t, double tau) const {
  const double l1 = lambda_(0), lj = lambda_(j_ - 1);
  cplx acc(0.0, 0.0);
  for (int n = 0; n < N_; ++n) {
    const double g = (l1 - lambda_(n)) * c1_(n) * sj_(n);
    if (g == 0.0) continue;
    acc += g * std::exp(kI * ((lj - lambda_(n)) * t + (lambda_(n) - l1) * tau));
  }
  return acc;
}

cplx KernelSet::cubic2(double t, double tau) const {
  const double l1 = lambda_(0), lj = lambda_(j_ - 1);
  cplx acc(0.0, 0.0);
  for (int n = 0; n < N_; ++n) {
    const double g = (lambda_(n) - lj) * s1_(n) * cj_(n);
    if (g == 0.0) continue;
    acc += g * std::exp(kI * ((lj - lambda_(n)) * t + (lambda_(n) - l1) * tau));
  }
  return acc;
}

cplx KernelSet::cubic3(double t, double tau, double s) const {
  const double l1 = lambda_(0), lj = lambda_(j_ - 1);
  cplx acc(0.0, 0.0);
  for (int p = 0; p < N_; ++p) {
    if (cj_(p) == 0.0) continue;
    const double lp = lambda_(p);
    for (int n = 0; n < N_; ++n) {
      const double ln = lambda_(n);
      const double g = (l1 - ln) * (ln - lp) * (lp - lj) * c1_(n) * M_(p, n) * cj_(p);
      if (g == 0.0) continue;
      acc += g * std::exp(kI * ((lj - lp) * t + (lp - ln) * tau + (ln - l1) * s));
    }
  }
  return acc;
}

cplx quad_term_direct(const KernelSet& ks, const ControlSignal& u, bool parallel) {
  const double l1 = ks.lambda_(0), lj = ks.lambda_(ks.j_ - 1);
  const double span = ks.lambda_(ks.N_ - 1) - l1;
  const PwPoly u1 = u.primitive(1).refined_for_frequency(2.0 * span + 1.0);
  const cplx mom = u1.times(u1).moment(lj - l1);
  const cplx kern = blocked_sum(ks.N_, parallel, [&](int n) -> cplx {
    const double g = (l1 - ks.lambda_(n)) * (ks.lambda_(n) - lj) * ks.c1_(n) * ks.cj_(n);
    if (g == 0.0) return cplx(0.0, 0.0);
    return g * ordered_double(u1, u1, lj - ks.lambda_(n), ks.lambda_(n) - l1);
  });
  return -kI * ks.a_[0] * mom + kern;
}

cplx quad_term_ipp(const KernelSet& ks, const ControlSignal& u, bool parallel) {
  const double T = u.t_end();
  const PwPoly& u2 = u.primitive(2);
  const PwPoly& u3 = u.primitive(3);
  if (std::abs(u2(T)) > 1e-7 * (1.0 + u2.sup_norm()) ||
      std::abs(u3(T)) > 1e-7 * (1.0 + u3.sup_norm()))
    throw std::invalid_argument("integrated quadratic form needs u2 and u3 to vanish at the end");
  const double l1 = ks.lambda_(0), lj = ks.lambda_(ks.j_ - 1);
  const double span = ks.lambda_(ks.N_ - 1) - l1;
  const double w = lj - l1;
  cplx mom(0.0, 0.0);
  for (int p = 1; p <= 3; ++p) {
    const PwPoly up = u.primitive(p).refined_for_frequency(w + 1.0);
    mom += -kI * ks.a_[p - 1] * up.times(up).moment(w);
  }
  const PwPoly u3r = u3.refined_for_frequency(2.0 * span + 1.0);
  const cplx kern = blocked_sum(ks.N_, parallel, [&](int n) -> cplx {
    const double g = (l1 - ks.lambda_(n)) * (ks.lambda_(n) - lj) * ks.c1_(n) * ks.cj_(n);
    if (g == 0.0) return cplx(0.0, 0.0);
    const double a = lj - ks.lambda_(n), b = ks.lambda_(n) - l1;
    return g * (a * a) * (b * b) * ordered_double(u3r, u3r, a, b);
  });
  return mom + kern;
}

cplx cubic_term_kernels(const KernelSet& ks, const ControlSignal& u, bool parallel) {
  const double l1 = ks.lambda_(0), lj = ks.lambda_(ks.j_ - 1);
  const double span = ks.lambda_(ks.N_ - 1) - l1;
  const PwPoly r = u.primitive(1).refined_for_frequency(3.0 * span + 1.0);
  const PwPoly rsq = r.times(r);
  const cplx part1 = blocked_sum(ks.N_, parallel, [&](int n) -> cplx {
    const double g = (l1 - ks.lambda_(n)) * ks.c1_(n) * ks.sj_(n);
    if (g == 0.0) return cplx(0.0, 0.0);
    return g * ordered_double(rsq, r, lj - ks.lambda_(n), ks.lambda_(n) - l1);
  });
  const cplx part2 = blocked_sum(ks.N_, parallel, [&](int n) -> cplx {
    const double g = (ks.lambda_(n) - lj) * ks.s1_(n) * ks.cj_(n);
    if (g == 0.0) return cplx(0.0, 0.0);
    return g * ordered_double(r, rsq, lj - ks.lambda_(n), ks.lambda_(n) - l1);
  });
  const cplx part3 = blocked_sum(ks.N_ * ks.N_, parallel, [&](int idx) -> cplx {
    const int p = idx / ks.N_, n = idx % ks.N_;
    const double lp = ks.lambda_(p), ln = ks.lambda_(n);
    const double g = (l1 - ln) * (ln - lp) * (lp - lj) * ks.c1_(n) * ks.M_(p, n) * ks.cj_(p);
    if (g == 0.0) return cplx(0.0, 0.0);
    return g * ordered_triple(r, r, r, lj - lp, lp - ln, ln - l1);
  });
  return kI * part1 + kI * part2 - part3;
}

cplx heuristic_leading(const ControlSignal& u, double a3, double c) {
  const PwPoly& u1 = u.primitive(1);
  const PwPoly& u2 = u.primitive(2);
  const PwPoly& u3 = u.primitive(3);
  const double quad_part = u3.l2_norm();
  const double cubic_part = u1.times(u1).times(u2).integral();
  return cplx(0.0, c * cubic_part - a3 * quad_part * quad_part);
}

double non_overlap_delta(const ControlSignal& u, double t1) {
  const double T = u.t_end();
  if (!(t1 > u.t_begin() && t1 <= T))
    throw std::invalid_argument("window start outside the control support");
  const PwPoly& u1 = u.primitive(1);
  const PwPoly& u2 = u.primitive(2);
  const PwPoly& u3 = u.primitive(3);
  const auto need_zero = [](const PwPoly& p, double t, const char* what) {
    if (std::abs(p(t)) > 1e-7 * (1.0 + p.sup_norm()))
      throw std::invalid_argument(std::string("non-overlap estimate needs ") + what);
  };
  need_zero(u1, t1, "u1 to vanish at the window start");
  need_zero(u2, t1, "u2 to vanish at the window start");
  need_zero(u3, t1, "u3 to vanish at the window start");
  need_zero(u2, T, "u2 to vanish at the endpoint");
  need_zero(u3, T, "u3 to vanish at the endpoint");
  const double l2u1 = u1.l2_norm(), l1u1 = u1.lp_norm(1.0), l2u3 = u3.l2_norm();
  return l2u3 * l2u3 + l2u1 * l2u1 * u2.lp_norm(1.0) + l1u1 * l1u1 * l1u1 +
         windowed_l2sq(u1, t1, T) * l1u1 + windowed_sup(u2, t1, T) * l2u1 * l2u1;
}

cplx quad_term_direct_tabulated(const KernelSet& ks, const ControlSignal& u, int kernel_grid,
                                int quad_steps) {
  if (kernel_grid < 8 || quad_steps < 16 || quad_steps % 2 != 0)
    throw std::invalid_argument("tabulated evaluation needs a usable grid");
  const PwPoly& u1 = u.primitive(1);
  const double t0 = u1.t_begin(), T = u1.t_end();
  const int G = kernel_grid;
  const double ht = (T - t0) / G;

  // Kernel table with one ghost node beyond each boundary (the series
  // evaluates anywhere), so the interpolation stencil never clamps.
  std::vector<cplx> tab(static_cast<std::size_t>(G + 3) * (G + 3));
  for (int i = 0; i <= G + 2; ++i)
    for (int l = 0; l <= G + 2; ++l)
      tab[static_cast<std::size_t>(i) * (G + 3) + l] =
          ks.quad(t0 + (i - 1) * ht, t0 + (l - 1) * ht);

  const auto weights = [](double f, double w[4]) {
    w[0] = ((-0.5 * f + 1.0) * f - 0.5) * f;
    w[1] = (1.5 * f - 2.5) * f * f + 1.0;
    w[2] = ((-1.5 * f + 2.0) * f + 0.5) * f;
    w[3] = (0.5 * f - 0.5) * f * f;
  };
  const auto interp = [&](double t, double s) -> cplx {
    const double x = (t - t0) / ht, y = (s - t0) / ht;
    const int i0 = std::min(G - 1, std::max(0, static_cast<int>(std::floor(x))));
    const int l0 = std::min(G - 1, std::max(0, static_cast<int>(std::floor(y))));
    double wx[4], wy[4];
    weights(x - i0, wx);
    weights(y - l0, wy);
    cplx v(0.0, 0.0);
    for (int di = 0; di < 4; ++di) {
      cplx row(0.0, 0.0);
      for (int dl = 0; dl < 4; ++dl)
        row += wy[dl] * tab[static_cast<std::size_t>(i0 + di) * (G + 3) + (l0 + dl)];
      v += wx[di] * row;
    }
    return v;
  };

  // Iterated trapezoid over {s < t} with aligned nodes; one Richardson step
  // removes the leading h^2 error.
  const auto sweep = [&](int steps) -> cplx {
    const double h = (T - t0) / steps;
    std::vector<double> uv(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) uv[static_cast<std::size_t>(i)] = u1(t0 + i * h);
    cplx acc(0.0, 0.0);
    for (int i = 1; i <= steps; ++i) {
      const double t = t0 + i * h;
      cplx inner(0.0, 0.0);
      for (int l = 0; l <= i; ++l) {
        const cplx f = uv[static_cast<std::size_t>(l)] * interp(t, t0 + l * h);
        inner += (l == 0 || l == i) ? 0.5 * f : f;
      }
      const cplx g = uv[static_cast<std::size_t>(i)] * h * inner;
      acc += (i == steps) ? 0.5 * g : g;
    }
    return acc * h;
  };
  const double w = ks.gap();
  const auto moment_sweep = [&](int steps) -> cplx {
    const double h = (T - t0) / steps;
    cplx acc(0.0, 0.0);
    for (int i = 0; i <= steps; ++i) {
      const double t = t0 + i * h;
      const cplx f = u1(t) * u1(t) * std::exp(kI * (w * t));
      acc += (i == 0 || i == steps) ? 0.5 * f : f;
    }
    return acc * h;
  };

  const cplx kern = (4.0 * sweep(quad_steps) - sweep(quad_steps / 2)) / 3.0;
  const cplx mom = (4.0 * moment_sweep(quad_steps) - moment_sweep(quad_steps / 2)) / 3.0;
  return -kI * ks.a1() * mom + kern;
}

}  // namespace qctrl
