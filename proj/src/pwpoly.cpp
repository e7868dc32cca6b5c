#include "qctrl/pwpoly.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qctrl {

namespace {

using CP = std::vector<cplx>;  // complex polynomial in the scaled cell variable

constexpr double kSeriesTol = 1e-18;
constexpr int kMaxSeries = 72;

int series_length(double zabs) {
  int l = 8 + static_cast<int>(std::ceil(zabs));
  double f = 1.0;
  int k = 0;
  while ((k < l || f > kSeriesTol) && k < kMaxSeries) {
    ++k;
    f *= zabs / k;
  }
  return k;
}

// out(xi) = int_0^xi P(eta) e^{i z eta} d eta as a polynomial; needs |z| <~ 4
// for full accuracy, which the callers guarantee by grid refinement.
void series_antiderivative(const CP& P, double z, CP& out) {
  const int deg = static_cast<int>(P.size()) - 1;
  const int L = series_length(std::abs(z));
  out.assign(deg + L + 2, cplx(0.0));
  cplx izl(1.0, 0.0);  // (iz)^l / l!
  for (int l = 0; l <= L; ++l) {
    for (int r = 0; r <= deg; ++r) out[r + l + 1] += P[r] * izl / double(r + l + 1);
    izl *= cplx(0.0, z) / double(l + 1);
  }
  double mx = 0.0;
  for (const cplx& c : out) mx = std::max(mx, std::abs(c));
  while (out.size() > 1 && std::abs(out.back()) < 1e-18 * mx) out.pop_back();
}

cplx scaled_polyexp_small(const CP& P, double z) {
  const int deg = static_cast<int>(P.size()) - 1;
  const int L = series_length(std::abs(z));
  cplx acc(0.0, 0.0);
  cplx izl(1.0, 0.0);
  for (int l = 0; l <= L; ++l) {
    cplx s(0.0, 0.0);
    for (int r = deg; r >= 0; --r) s += P[r] / double(r + l + 1);
    acc += izl * s;
    izl *= cplx(0.0, z) / double(l + 1);
  }
  return acc;
}

// int_0^1 P(xi) e^{i z xi} d xi, any z: split into chunks with |z|/n <= 4.
cplx scaled_polyexp(const CP& P, double z) {
  if (std::abs(z) <= 4.0) return scaled_polyexp_small(P, z);
  const int n = static_cast<int>(std::ceil(std::abs(z) / 4.0));
  const int deg = static_cast<int>(P.size()) - 1;
  cplx acc(0.0, 0.0);
  CP Pj(P.size());
  for (int j = 0; j < n; ++j) {
    const double off = double(j) / n;
    for (int r = 0; r <= deg; ++r) {
      double C = 1.0;  // C(m, r), updated over m
      double pw = 1.0;
      cplx s(0.0, 0.0);
      for (int m = r; m <= deg; ++m) {
        s += P[m] * C * pw;
        pw *= off;
        C = C * (m + 1) / double(m + 1 - r);
      }
      Pj[r] = s / std::pow(double(n), r);
    }
    acc += std::exp(cplx(0.0, z * off)) * scaled_polyexp_small(Pj, z / n) / double(n);
  }
  return acc;
}

CP to_cp(const std::vector<double>& c) {
  CP out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = cplx(c[i], 0.0);
  return out;
}

CP cp_mul(const CP& a, const CP& b) {
  CP out(a.size() + b.size() - 1, cplx(0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

cplx cp_eval1(const CP& a) {
  cplx s(0.0, 0.0);
  for (const cplx& c : a) s += c;
  return s;
}

void require_same_grid(const PwPoly& a, const PwPoly& b) {
  if (a.edges().size() != b.edges().size())
    throw std::invalid_argument("ordered integral: amplitude grids differ");
  for (std::size_t i = 0; i < a.edges().size(); ++i) {
    if (std::abs(a.edges()[i] - b.edges()[i]) > 1e-12)
      throw std::invalid_argument("ordered integral: amplitude grids differ");
  }
}

const gsl_integration_glfixed_table* gl32() {
  static gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(32);
  return t;
}

}  // namespace

PwPoly PwPoly::from_samples(const std::vector<double>& grid, const std::vector<double>& values) {
  if (grid.size() < 2 || grid.size() != values.size())
    throw std::invalid_argument("from_samples: bad grid");
  PwPoly p;
  p.edges_ = grid;
  p.width_.resize(grid.size() - 1);
  p.coef_.resize(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    p.width_[k] = grid[k + 1] - grid[k];
    p.coef_[k] = {values[k], values[k + 1] - values[k]};
  }
  return p;
}

PwPoly PwPoly::from_hermite(const std::vector<double>& grid, const std::vector<double>& values,
                            const std::vector<double>& slopes) {
  if (grid.size() < 2 || grid.size() != values.size() || grid.size() != slopes.size())
    throw std::invalid_argument("from_hermite: bad grid");
  PwPoly p;
  p.edges_ = grid;
  p.width_.resize(grid.size() - 1);
  p.coef_.resize(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double h = grid[k + 1] - grid[k];
    const double d = values[k + 1] - values[k];
    p.width_[k] = h;
    p.coef_[k] = {values[k], h * slopes[k], 3.0 * d - 2.0 * h * slopes[k] - h * slopes[k + 1],
                  -2.0 * d + h * slopes[k] + h * slopes[k + 1]};
  }
  return p;
}

PwPoly PwPoly::zero(double a, double b) { return constant(a, b, 0.0); }

PwPoly PwPoly::constant(double a, double b, double c) {
  PwPoly p;
  p.edges_ = {a, b};
  p.width_ = {b - a};
  p.coef_ = {{c}};
  return p;
}

int PwPoly::degree() const {
  std::size_t d = 1;
  for (const auto& c : coef_) d = std::max(d, c.size());
  return static_cast<int>(d) - 1;
}

double PwPoly::cell_value(int k, double xi) const {
  const auto& c = coef_[k];
  double v = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) v = v * xi + c[m];
  return v;
}

double PwPoly::operator()(double t) const {
  if (t <= edges_.front()) return cell_value(0, (t - edges_.front()) / width_[0]);
  if (t >= edges_.back())
    return cell_value(cells() - 1, (t - edges_[cells() - 1]) / width_[cells() - 1]);
  int k = static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), t) - edges_.begin()) - 1;
  k = std::min(std::max(k, 0), cells() - 1);
  return cell_value(k, (t - edges_[k]) / width_[k]);
}

PwPoly PwPoly::antiderivative() const {
  PwPoly p;
  p.edges_ = edges_;
  p.width_ = width_;
  p.coef_.resize(coef_.size());
  double run = 0.0;
  for (int k = 0; k < cells(); ++k) {
    const auto& c = coef_[k];
    std::vector<double> o(c.size() + 1, 0.0);
    o[0] = run;
    double cell_total = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) {
      o[m + 1] = width_[k] * c[m] / double(m + 1);
      cell_total += o[m + 1];
    }
    p.coef_[k] = std::move(o);
    run += cell_total;
  }
  return p;
}

PwPoly PwPoly::derivative() const {
  PwPoly p;
  p.edges_ = edges_;
  p.width_ = width_;
  p.coef_.resize(coef_.size());
  for (int k = 0; k < cells(); ++k) {
    const auto& c = coef_[k];
    if (c.size() <= 1) {
      p.coef_[k] = {0.0};
      continue;
    }
    std::vector<double> o(c.size() - 1);
    for (std::size_t m = 1; m < c.size(); ++m) o[m - 1] = c[m] * double(m) / width_[k];
    p.coef_[k] = std::move(o);
  }
  return p;
}

PwPoly merge_like(const PwPoly& a, const PwPoly& b, bool product) {
  // Align on the union grid, then combine cellwise.
  std::vector<double> ed;
  ed.reserve(a.edges_.size() + b.edges_.size());
  ed.insert(ed.end(), a.edges_.begin(), a.edges_.end());
  ed.insert(ed.end(), b.edges_.begin(), b.edges_.end());
  std::sort(ed.begin(), ed.end());
  std::vector<double> u;
  for (double v : ed)
    if (u.empty() || v - u.back() > 1e-14) u.push_back(v);
  if (std::abs(a.t_begin() - b.t_begin()) > 1e-12 || std::abs(a.t_end() - b.t_end()) > 1e-12)
    throw std::invalid_argument("combining piecewise polynomials on different supports");
  PwPoly A = a.on_grid(u);
  PwPoly B = b.on_grid(u);
  PwPoly r;
  r.edges_ = A.edges_;
  r.width_ = A.width_;
  r.coef_.resize(A.coef_.size());
  for (int k = 0; k < A.cells(); ++k) {
    const auto& ca = A.coef_[k];
    const auto& cb = B.coef_[k];
    if (product) {
      std::vector<double> o(ca.size() + cb.size() - 1, 0.0);
      for (std::size_t i = 0; i < ca.size(); ++i)
        for (std::size_t j = 0; j < cb.size(); ++j) o[i + j] += ca[i] * cb[j];
      r.coef_[k] = std::move(o);
    } else {
      std::vector<double> o(std::max(ca.size(), cb.size()), 0.0);
      for (std::size_t i = 0; i < ca.size(); ++i) o[i] += ca[i];
      for (std::size_t i = 0; i < cb.size(); ++i) o[i] += cb[i];
      r.coef_[k] = std::move(o);
    }
  }
  return r;
}

PwPoly PwPoly::plus(const PwPoly& o) const { return merge_like(*this, o, false); }
PwPoly PwPoly::times(const PwPoly& o) const { return merge_like(*this, o, true); }

PwPoly PwPoly::scaled(double c) const {
  PwPoly p = *this;
  for (auto& cell : p.coef_)
    for (double& v : cell) v *= c;
  return p;
}

PwPoly PwPoly::times_t() const {
  PwPoly p;
  p.edges_ = edges_;
  p.width_ = width_;
  p.coef_.resize(coef_.size());
  for (int k = 0; k < cells(); ++k) {
    const auto& c = coef_[k];
    std::vector<double> o(c.size() + 1, 0.0);
    for (std::size_t m = 0; m < c.size(); ++m) {
      o[m] += c[m] * edges_[k];
      o[m + 1] += c[m] * width_[k];
    }
    p.coef_[k] = std::move(o);
  }
  return p;
}

PwPoly PwPoly::on_grid(const std::vector<double>& new_edges) const {
  PwPoly p;
  p.edges_ = new_edges;
  p.width_.resize(new_edges.size() - 1);
  p.coef_.resize(new_edges.size() - 1);
  for (std::size_t k = 0; k + 1 < new_edges.size(); ++k) {
    const double al = new_edges[k], be = new_edges[k + 1];
    p.width_[k] = be - al;
    const double mid = 0.5 * (al + be);
    int src = static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), mid) -
                               edges_.begin()) -
              1;
    src = std::min(std::max(src, 0), cells() - 1);
    const auto& c = coef_[src];
    const int deg = static_cast<int>(c.size()) - 1;
    const double u0 = (al - edges_[src]) / width_[src];
    const double u1 = (be - al) / width_[src];
    std::vector<double> o(c.size(), 0.0);
    for (int r = 0; r <= deg; ++r) {
      double C = 1.0;  // C(m, r)
      double pw = 1.0;
      double s = 0.0;
      for (int m = r; m <= deg; ++m) {
        s += c[m] * C * pw;
        pw *= u0;
        C = C * (m + 1) / double(m + 1 - r);
      }
      double u1r = 1.0;
      for (int i = 0; i < r; ++i) u1r *= u1;
      o[r] = s * u1r;
    }
    p.coef_[k] = std::move(o);
  }
  return p;
}

PwPoly PwPoly::refined_for_frequency(double omega_max, double bound) const {
  const double w = std::abs(omega_max);
  std::vector<double> ed;
  ed.push_back(edges_.front());
  for (int k = 0; k < cells(); ++k) {
    int n = std::max(1, static_cast<int>(std::ceil(w * width_[k] / bound)));
    for (int i = 1; i <= n; ++i) ed.push_back(edges_[k] + width_[k] * i / n);
  }
  return on_grid(ed);
}

double PwPoly::integral() const {
  double s = 0.0;
  for (int k = 0; k < cells(); ++k) {
    const auto& c = coef_[k];
    double cell = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) cell += c[m] / double(m + 1);
    s += width_[k] * cell;
  }
  return s;
}

double PwPoly::l2_inner(const PwPoly& o) const {
  PwPoly prod = times(o);
  return prod.integral();
}

double PwPoly::l2_norm() const { return std::sqrt(std::max(0.0, l2_inner(*this))); }

double PwPoly::lp_norm(double p) const {
  const gsl_integration_glfixed_table* t = gl32();
  double acc = 0.0;
  for (int k = 0; k < cells(); ++k) {
    for (int i = 0; i < 32; ++i) {
      double xi = 0.0, wi = 0.0;
      gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(i), &xi, &wi,
                                    const_cast<gsl_integration_glfixed_table*>(t));
      acc += width_[k] * wi * std::pow(std::abs(cell_value(k, xi)), p);
    }
  }
  return std::pow(acc, 1.0 / p);
}

double PwPoly::sup_norm() const {
  double mx = 0.0;
  for (int k = 0; k < cells(); ++k) {
    for (int i = 0; i <= 24; ++i) mx = std::max(mx, std::abs(cell_value(k, i / 24.0)));
  }
  return mx;
}

PwPoly PwPoly::join(const PwPoly& a, const PwPoly& b) {
  if (std::abs(a.t_end() - b.t_begin()) > 1e-12)
    throw std::invalid_argument("join: pieces are not contiguous");
  PwPoly r;
  r.edges_ = a.edges_;
  r.edges_.insert(r.edges_.end(), b.edges_.begin() + 1, b.edges_.end());
  r.width_ = a.width_;
  r.width_.insert(r.width_.end(), b.width_.begin(), b.width_.end());
  r.coef_ = a.coef_;
  r.coef_.insert(r.coef_.end(), b.coef_.begin(), b.coef_.end());
  return r;
}

cplx PwPoly::moment(double omega) const {
  cplx acc(0.0, 0.0);
  for (int k = 0; k < cells(); ++k) {
    const double h = width_[k];
    acc += std::exp(cplx(0.0, omega * edges_[k])) * h * scaled_polyexp(to_cp(coef_[k]), omega * h);
  }
  return acc;
}

namespace {

// The cellwise series below need |omega| * h <= ~4 for every participating
// frequency; split cells first when the caller's grid is coarser.
double max_cell_width(const PwPoly& p) {
  double h = 0.0;
  for (int k = 0; k < p.cells(); ++k) h = std::max(h, p.cell_width(k));
  return h;
}

}  // namespace

cplx ordered_double(const PwPoly& p, const PwPoly& q, double a, double b) {
  require_same_grid(p, q);
  const double wmax = std::max(std::abs(a), std::abs(b));
  if (wmax * max_cell_width(p) > 4.0) {
    PwPoly p2 = p.refined_for_frequency(wmax);
    PwPoly q2 = q.on_grid(p2.edges());
    return ordered_double(p2, q2, a, b);
  }
  cplx acc(0.0, 0.0);
  cplx Q(0.0, 0.0);  // int_{t0}^{t_k} q e^{i b s} ds
  CP Aq;
  for (int k = 0; k < p.cells(); ++k) {
    const double h = p.cell_width(k);
    const double tk = p.edges()[k];
    const CP qt = to_cp(q.cell_coef(k));
    const CP pt = to_cp(p.cell_coef(k));
    series_antiderivative(qt, b * h, Aq);
    const cplx eat = std::exp(cplx(0.0, a * tk));
    const cplx ebt = std::exp(cplx(0.0, b * tk));
    const cplx i0 = scaled_polyexp(pt, a * h);
    const cplx i1 = scaled_polyexp(cp_mul(pt, Aq), a * h);
    acc += eat * h * (Q * i0 + ebt * h * i1);
    Q += ebt * h * cp_eval1(Aq);
  }
  return acc;
}

cplx ordered_triple(const PwPoly& p, const PwPoly& q, const PwPoly& w, double a, double b,
                    double c) {
  require_same_grid(p, q);
  require_same_grid(p, w);
  const double wmax = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (wmax * max_cell_width(p) > 4.0) {
    PwPoly p2 = p.refined_for_frequency(wmax);
    PwPoly q2 = q.on_grid(p2.edges());
    PwPoly w2 = w.on_grid(p2.edges());
    return ordered_triple(p2, q2, w2, a, b, c);
  }
  cplx acc(0.0, 0.0);
  cplx R(0.0, 0.0);   // int w e^{i c r} up to t_k
  cplx W2(0.0, 0.0);  // inner ordered double up to t_k
  CP Aw, Aq, Cpoly;
  for (int k = 0; k < p.cells(); ++k) {
    const double h = p.cell_width(k);
    const double tk = p.edges()[k];
    const CP wt = to_cp(w.cell_coef(k));
    const CP qt = to_cp(q.cell_coef(k));
    const CP pt = to_cp(p.cell_coef(k));
    series_antiderivative(wt, c * h, Aw);
    series_antiderivative(qt, b * h, Aq);
    series_antiderivative(cp_mul(qt, Aw), b * h, Cpoly);
    const cplx eat = std::exp(cplx(0.0, a * tk));
    const cplx ebt = std::exp(cplx(0.0, b * tk));
    const cplx ect = std::exp(cplx(0.0, c * tk));
    // B(xi) = R * Aq(xi) + e^{i c t_k} h * Cpoly(xi)
    CP B(std::max(Aq.size(), Cpoly.size()), cplx(0.0));
    for (std::size_t i = 0; i < Aq.size(); ++i) B[i] += R * Aq[i];
    for (std::size_t i = 0; i < Cpoly.size(); ++i) B[i] += ect * h * Cpoly[i];
    const cplx i0 = scaled_polyexp(pt, a * h);
    const cplx i1 = scaled_polyexp(cp_mul(pt, B), a * h);
    acc += eat * h * (W2 * i0 + ebt * h * i1);
    W2 += ebt * h * cp_eval1(B);
    R += ect * h * cp_eval1(Aw);
  }
  return acc;
}

}  // namespace qctrl
