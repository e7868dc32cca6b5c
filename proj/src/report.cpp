#include "qctrl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qctrl {

SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int n = static_cast<int>(xs.size());
  if (n < 3 || ys.size() != xs.size())
    throw std::invalid_argument("slope_fit: need at least 3 paired points");
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument("slope_fit: values must be finite and positive");
    lx[i] = std::log10(xs[i]);
    ly[i] = std::log10(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("slope_fit: degenerate abscissa spread");
  SlopeFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += r * r;
  }
  f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  f.slope_se = (n > 2) ? std::sqrt(ss_res / ((n - 2) * sxx)) : 0.0;
  return f;
}

double decades(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("decades: empty grid");
  double lo = xs[0], hi = xs[0];
  for (double v : xs) {
    if (!(v > 0.0)) throw std::invalid_argument("decades: grid must be positive");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::log10(hi / lo);
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_text(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("csv_text: row width does not match header");
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_full(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  f << csv_text(columns, rows);
  if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace qctrl
