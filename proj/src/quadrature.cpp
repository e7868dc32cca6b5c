#include "qctrl/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qctrl {

std::vector<double> uniform_edges(double a, double b, int panels) {
  std::vector<double> e(panels + 1);
  for (int i = 0; i <= panels; ++i) e[i] = a + (b - a) * i / panels;
  return e;
}

std::vector<double> merge_edges(std::vector<double> edges) {
  std::sort(edges.begin(), edges.end());
  std::vector<double> out;
  for (double v : edges) {
    if (out.empty() || v - out.back() > 1e-13) out.push_back(v);
  }
  return out;
}

QuadRule gl_panels(const std::vector<double>& edges, int nodes_per_panel) {
  if (edges.size() < 2) throw std::invalid_argument("gl_panels: need at least two edges");
  gsl_integration_glfixed_table* t =
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nodes_per_panel));
  QuadRule r;
  r.x.reserve((edges.size() - 1) * nodes_per_panel);
  r.w.reserve((edges.size() - 1) * nodes_per_panel);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    for (int i = 0; i < nodes_per_panel; ++i) {
      double xi = 0.0, wi = 0.0;
      gsl_integration_glfixed_point(edges[p], edges[p + 1], static_cast<std::size_t>(i), &xi, &wi,
                                    t);
      r.x.push_back(xi);
      r.w.push_back(wi);
    }
  }
  gsl_integration_glfixed_table_free(t);
  return r;
}

}  // namespace qctrl
