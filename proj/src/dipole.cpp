#include "qctrl/dipole.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qctrl {

namespace {

double bump_value(double y) {
  if (!(y > 0.0 && y < 1.0)) return 0.0;
  double t = 1.0 / (y * (1.0 - y));
  return t > 744.0 ? 0.0 : std::exp(-t);
}

double smoothstep_value(double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double a = y < 1.0 / 744.0 ? 0.0 : std::exp(-1.0 / y);
  double b = 1.0 - y < 1.0 / 744.0 ? 0.0 : std::exp(-1.0 / (1.0 - y));
  if (a == 0.0 && b == 0.0) return 0.5;
  return a / (a + b);
}

double poly_value(const std::vector<double>& c, double y) {
  double v = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) v = v * y + c[m];
  return v;
}

Jet fade_down_jet(double y) {  // 1 - smoothstep
  return jet_add(jet_constant(1.0), jet_scale(smoothstep_jet(y), -1.0));
}

}  // namespace

double DipoleAtom::value(double x) const {
  switch (kind) {
    case Kind::interior: {
      double y = (x - pos) / width;
      if (!(y > 0.0 && y < 1.0)) return 0.0;
      return amp * poly_value(poly, y) * bump_value(y);
    }
    case Kind::edge_left: {
      double y = x / width;
      if (y < 0.0 || y >= 1.0) return 0.0;
      return amp * poly_value(poly, y) * (1.0 - smoothstep_value(y));
    }
    case Kind::edge_right: {
      double y = (1.0 - x) / width;
      if (y < 0.0 || y >= 1.0) return 0.0;
      return amp * poly_value(poly, y) * (1.0 - smoothstep_value(y));
    }
  }
  return 0.0;
}

Jet DipoleAtom::jet(double x) const {
  const int deg = static_cast<int>(poly.size()) - 1;
  switch (kind) {
    case Kind::interior: {
      double y = (x - pos) / width;
      if (!(y > 0.0 && y < 1.0)) return Jet{};
      Jet f = jet_mul(jet_poly(poly.data(), deg, y), bump_jet(y));
      return jet_scale(jet_rescale(f, width), amp);
    }
    case Kind::edge_left: {
      double y = x / width;
      if (y < 0.0 || y >= 1.0) return Jet{};
      Jet f = jet_mul(jet_poly(poly.data(), deg, y), fade_down_jet(y));
      return jet_scale(jet_rescale(f, width), amp);
    }
    case Kind::edge_right: {
      double y = (1.0 - x) / width;
      if (y < 0.0 || y >= 1.0) return Jet{};
      Jet f = jet_mul(jet_poly(poly.data(), deg, y), fade_down_jet(y));
      return jet_scale(jet_rescale(f, -width), amp);
    }
  }
  return Jet{};
}

double DipoleProfile::value(double x) const {
  double v = 0.0;
  for (const auto& a : atoms) v += a.value(x);
  for (const auto& t : trig)
    v += t.c * (t.sine ? std::sin(t.m * kPi * x) : std::cos(t.m * kPi * x));
  return v;
}

Jet DipoleProfile::jet(double x) const {
  Jet v;
  for (const auto& a : atoms) v = jet_add(v, a.jet(x));
  for (const auto& t : trig) {
    Jet w = t.sine ? jet_sin(t.m * kPi, 0.0, x) : jet_cos(t.m * kPi, 0.0, x);
    v = jet_add(v, jet_scale(w, t.c));
  }
  return v;
}

double DipoleProfile::derivative(double x, int order) const { return jet(x)[order]; }

std::vector<double> DipoleProfile::panel_edges() const {
  std::vector<double> e = uniform_edges(0.0, 1.0, 8);
  for (const auto& a : atoms) {
    double lo = 0.0, hi = 0.0;
    switch (a.kind) {
      case DipoleAtom::Kind::interior:
        lo = a.pos;
        hi = a.pos + a.width;
        break;
      case DipoleAtom::Kind::edge_left:
        lo = 0.0;
        hi = a.width;
        break;
      case DipoleAtom::Kind::edge_right:
        lo = 1.0 - a.width;
        hi = 1.0;
        break;
    }
    for (int i = 0; i <= 6; ++i) {
      double v = lo + (hi - lo) * i / 6.0;
      if (v > 0.0 && v < 1.0) e.push_back(v);
    }
  }
  return merge_edges(std::move(e));
}

double wall_derivative(const DipoleProfile& mu, int order, bool right_wall) {
  return mu.jet(right_wall ? 1.0 : 0.0)[order];
}

namespace {

struct NodeTables {
  QuadRule rule;
  Mat phi;   // N x nodes
  Mat phip;  // N x nodes
};

NodeTables make_tables(const DipoleProfile& mu, bool need_phip) {
  NodeTables t;
  t.rule = gl_panels(mu.panel_edges(), 64);
  const int n = static_cast<int>(t.rule.x.size());
  t.phi.resize(mu.N, n);
  if (need_phip) t.phip.resize(mu.N, n);
  for (int j = 1; j <= mu.N; ++j) {
    for (int i = 0; i < n; ++i) {
      t.phi(j - 1, i) = phi(j, t.rule.x[i]);
      if (need_phip) t.phip(j - 1, i) = phi_prime(j, t.rule.x[i]);
    }
  }
  return t;
}

Vec weighted_values(const DipoleProfile& mu, const QuadRule& r, int order) {
  const int n = static_cast<int>(r.x.size());
  Vec v(n);
  if (order == 0) {
    for (int i = 0; i < n; ++i) v[i] = r.w[i] * mu.value(r.x[i]);
  } else {
    for (int i = 0; i < n; ++i) v[i] = r.w[i] * mu.jet(r.x[i])[order];
  }
  return v;
}

}  // namespace

Vec coeff_row(const DipoleProfile& mu, int q) {
  NodeTables t = make_tables(mu, false);
  const int n = static_cast<int>(t.rule.x.size());
  Vec s(n);
  for (int i = 0; i < n; ++i) s[i] = t.rule.w[i] * mu.value(t.rule.x[i]) * phi(q, t.rule.x[i]);
  return t.phi * s;
}

double coeff(const DipoleProfile& mu, int q, int j) { return coeff_row(mu, q)[j - 1]; }

double coeff_tail_model(const DipoleProfile& mu, int q, int j) {
  double m50 = wall_derivative(mu, 5, false);
  double m51 = wall_derivative(mu, 5, true);
  double parity = ((j + q) % 2 == 0) ? 1.0 : -1.0;
  return 12.0 * q / (std::pow(kPi, 6) * std::pow(double(j), 7)) * (parity * m51 - m50);
}

Vec squared_slope_row(const DipoleProfile& mu, int q) {
  NodeTables t = make_tables(mu, false);
  const int n = static_cast<int>(t.rule.x.size());
  Vec s(n);
  for (int i = 0; i < n; ++i) {
    double d = mu.jet(t.rule.x[i])[1];
    s[i] = t.rule.w[i] * d * d * phi(q, t.rule.x[i]);
  }
  return t.phi * s;
}

Mat coupling_matrix(const DipoleProfile& mu) {
  NodeTables t = make_tables(mu, false);
  Vec v = weighted_values(mu, t.rule, 0);
  return t.phi * v.asDiagonal() * t.phi.transpose();
}

Mat derivative_matrix(const Mat& M) {
  const int N = static_cast<int>(M.rows());
  Mat D(N, N);
  for (int j = 1; j <= N; ++j)
    for (int n = 1; n <= N; ++n) D(j - 1, n - 1) = (eigenvalue(n) - eigenvalue(j)) * M(j - 1, n - 1);
  return D;
}

Mat derivative_matrix_quadrature(const DipoleProfile& mu) {
  NodeTables t = make_tables(mu, true);
  const int n = static_cast<int>(t.rule.x.size());
  Vec d1(n), d2(n);
  for (int i = 0; i < n; ++i) {
    Jet j = mu.jet(t.rule.x[i]);
    d1[i] = t.rule.w[i] * 2.0 * j[1];
    d2[i] = t.rule.w[i] * j[2];
  }
  return t.phi * d1.asDiagonal() * t.phip.transpose() + t.phi * d2.asDiagonal() * t.phi.transpose();
}

Mat squared_slope_matrix(const DipoleProfile& mu) {
  NodeTables t = make_tables(mu, false);
  const int n = static_cast<int>(t.rule.x.size());
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    double d = mu.jet(t.rule.x[i])[1];
    v[i] = t.rule.w[i] * d * d;
  }
  return t.phi * v.asDiagonal() * t.phi.transpose();
}

Mat squared_slope_matrix_commutator(const Mat& M) {
  const int N = static_cast<int>(M.rows());
  Vec lam(N);
  for (int j = 1; j <= N; ++j) lam[j - 1] = eigenvalue(j);
  Mat L = lam.asDiagonal();
  return -0.5 * (M * M * L - 2.0 * M * L * M + L * M * M);
}

namespace {

double a_series(const Vec& c1, const Vec& cK, int K, int Ncut, int p) {
  const double half = 0.5 * (eigenvalue(1) + eigenvalue(K));
  double s = 0.0;
  for (int j = 1; j <= Ncut; ++j) {
    double lj = eigenvalue(j);
    double term = (lj - half) * c1[j - 1] * cK[j - 1];
    for (int r = 1; r < p; ++r) term *= (eigenvalue(K) - lj) * (lj - eigenvalue(1));
    s += term;
  }
  return (p % 2 == 0) ? -s : s;
}

double c_series(const Vec& c1, const Vec& cK, const Vec& s1, const Vec& sK, int K, int Ncut) {
  double s = 0.0;
  for (int j = 1; j <= Ncut; ++j) {
    double lj = eigenvalue(j);
    s += (eigenvalue(1) - lj) * c1[j - 1] * sK[j - 1];
    s -= (lj - eigenvalue(K)) * cK[j - 1] * s1[j - 1];
  }
  return s;
}

}  // namespace

double drift_series_from_rows(const Vec& c1, const Vec& cK, int K, int Ncut, int p) {
  if (p < 1 || p > 3) throw std::invalid_argument("drift series order must be 1, 2 or 3");
  return a_series(c1, cK, K, Ncut, p);
}

double drift_series_cross(const Vec& c1a, const Vec& cKa, const Vec& c1b, const Vec& cKb, int K,
                          int Ncut, int p) {
  if (p < 1 || p > 3) throw std::invalid_argument("drift series order must be 1, 2 or 3");
  const double half = 0.5 * (eigenvalue(1) + eigenvalue(K));
  double s = 0.0;
  for (int j = 1; j <= Ncut; ++j) {
    double lj = eigenvalue(j);
    double term = (lj - half) * (c1a[j - 1] * cKb[j - 1] + c1b[j - 1] * cKa[j - 1]);
    for (int r = 1; r < p; ++r) term *= (eigenvalue(K) - lj) * (lj - eigenvalue(1));
    s += term;
  }
  return (p % 2 == 0) ? -s : s;
}

namespace {

struct DriftRows {
  Vec c1, cK, s1, sK;
  double c_bracket = 0.0;
};

// One pass over the quadrature nodes fills every row the series need.
DriftRows drift_rows(const DipoleProfile& mu, int K) {
  NodeTables t = make_tables(mu, false);
  const int n = static_cast<int>(t.rule.x.size());
  Vec w1(n), wK(n), v1(n), vK(n);
  double cb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = t.rule.x[i], w = t.rule.w[i];
    Jet j = mu.jet(x);
    const double p1 = phi(1, x), pK = phi(K, x);
    const double slope2 = j[1] * j[1];
    w1[i] = w * j[0] * p1;
    wK[i] = w * j[0] * pK;
    v1[i] = w * slope2 * p1;
    vK[i] = w * slope2 * pK;
    cb += w * slope2 * j[2] * p1 * pK;
  }
  DriftRows r;
  r.c1 = t.phi * w1;
  r.cK = t.phi * wK;
  r.s1 = t.phi * v1;
  r.sK = t.phi * vK;
  r.c_bracket = -4.0 * cb;
  return r;
}

}  // namespace

DriftCoefficients drift_coefficients(const DipoleProfile& mu, int K) {
  DriftRows r = drift_rows(mu, K);
  DriftCoefficients d;
  d.a1 = a_series(r.c1, r.cK, K, mu.N, 1);
  d.a2 = a_series(r.c1, r.cK, K, mu.N, 2);
  d.a3 = a_series(r.c1, r.cK, K, mu.N, 3);
  d.c = c_series(r.c1, r.cK, r.s1, r.sK, K, mu.N);
  d.a1_bracket = r.s1[K - 1];
  d.c_bracket = r.c_bracket;
  return d;
}

TailEstimate drift_series_tail(const DipoleProfile& mu, int K, int which) {
  DriftRows rows = drift_rows(mu, K);
  const Vec &c1 = rows.c1, &cK = rows.cK, &s1 = rows.s1, &sK = rows.sK;
  // Per-mode term magnitudes.  Signed partial sums oscillate for profiles whose
  // coefficients alternate, so the extrapolation works on the monotone envelope
  // sum of |term_j| instead: its block increments decay whenever the terms do.
  const int N = mu.N;
  Vec mag(N);
  const double half = 0.5 * (eigenvalue(1) + eigenvalue(K));
  for (int j = 1; j <= N; ++j) {
    double lj = eigenvalue(j);
    if (which == 0) {
      mag[j - 1] = std::abs((eigenvalue(1) - lj) * c1[j - 1] * sK[j - 1] -
                            (lj - eigenvalue(K)) * cK[j - 1] * s1[j - 1]);
    } else {
      double t = std::abs((lj - half) * c1[j - 1] * cK[j - 1]);
      for (int r = 1; r < which; ++r)
        t *= std::abs((eigenvalue(K) - lj) * (lj - eigenvalue(1)));
      mag[j - 1] = t;
    }
  }
  auto block = [&](int lo, int hi) {  // sum of |term_j| over (lo, hi]
    double s = 0.0;
    for (int j = lo + 1; j <= hi; ++j) s += mag[j - 1];
    return s;
  };
  double g1 = block(N - 6, N - 3), g2 = block(N - 3, N);
  TailEstimate e;
  if (g2 < 1e-300) {  // tail already identically zero (banded profiles)
    e.bound = 0.0;
    e.reliable = true;
    return e;
  }
  if (g1 < 1e-300 || g2 >= g1) {  // envelope not decaying across the last blocks
    e.reliable = false;
    e.bound = std::numeric_limits<double>::infinity();
    return e;
  }
  double r = g2 / g1;
  e.bound = 2.0 * g2 * r / (1.0 - r);
  e.reliable = true;
  return e;
}

HypothesisReport check_hypotheses(const DipoleProfile& mu, int K, const Tolerances& tol) {
  HypothesisReport rep;
  rep.K = K;
  rep.wall[0] = std::abs(wall_derivative(mu, 1, false));
  rep.wall[1] = std::abs(wall_derivative(mu, 1, true));
  rep.wall[2] = std::abs(wall_derivative(mu, 3, false));
  rep.wall[3] = std::abs(wall_derivative(mu, 3, true));
  Vec c1 = coeff_row(mu, 1);
  rep.c1K = c1[K - 1];
  rep.min_floor = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= mu.N; ++j) {
    if (j == K) continue;
    double f = std::pow(double(j), 7) * std::abs(c1[j - 1]);
    if (f < rep.min_floor) {
      rep.min_floor = f;
      rep.floor_argmin = j;
    }
  }
  rep.drift = drift_coefficients(mu, K);
  rep.regularity_ok = rep.wall[0] < tol.zero && rep.wall[1] < tol.zero && rep.wall[2] < tol.zero &&
                      rep.wall[3] < tol.zero;
  rep.linear_ok = std::abs(rep.c1K) < tol.zero && rep.min_floor > tol.nonzero;
  rep.quadratic_ok = std::abs(rep.drift.a1) < tol.zero && std::abs(rep.drift.a2) < tol.zero &&
                     std::abs(rep.drift.a3) > tol.nonzero;
  rep.cubic_ok = std::abs(rep.drift.c) > tol.nonzero;
  return rep;
}

std::string profile_to_json(const DipoleProfile& mu) {
  nlohmann::json j;
  j["N"] = mu.N;
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : mu.atoms) {
    const char* kind = a.kind == DipoleAtom::Kind::interior
                           ? "interior"
                           : (a.kind == DipoleAtom::Kind::edge_left ? "edge_left" : "edge_right");
    j["atoms"].push_back({{"kind", kind},
                          {"pos", a.pos},
                          {"width", a.width},
                          {"amp", a.amp},
                          {"poly", a.poly}});
  }
  j["trig"] = nlohmann::json::array();
  for (const auto& t : mu.trig)
    j["trig"].push_back({{"m", t.m}, {"c", t.c}, {"sine", t.sine}});
  return j.dump(2);
}

DipoleProfile profile_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DipoleProfile mu;
  mu.N = j.at("N").get<int>();
  for (const auto& a : j.value("atoms", nlohmann::json::array())) {
    DipoleAtom atom;
    std::string kind = a.at("kind").get<std::string>();
    atom.kind = kind == "interior" ? DipoleAtom::Kind::interior
                                   : (kind == "edge_left" ? DipoleAtom::Kind::edge_left
                                                          : DipoleAtom::Kind::edge_right);
    atom.pos = a.value("pos", 0.0);
    atom.width = a.at("width").get<double>();
    atom.amp = a.at("amp").get<double>();
    atom.poly = a.value("poly", std::vector<double>{1.0});
    mu.atoms.push_back(std::move(atom));
  }
  for (const auto& t : j.value("trig", nlohmann::json::array()))
    mu.trig.push_back({t.at("m").get<int>(), t.at("c").get<double>(), t.value("sine", false)});
  return mu;
}

void save_profile(const DipoleProfile& mu, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << profile_to_json(mu) << "\n";
}

DipoleProfile load_profile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return profile_from_json(ss.str());
}

}  // namespace qctrl
