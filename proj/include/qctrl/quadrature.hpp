#pragma once

#include <cstddef>
#include <vector>

namespace qctrl {

// Composite Gauss-Legendre rule: a fixed-order panel between consecutive edges.
struct QuadRule {
  std::vector<double> x, w;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
    return s;
  }
};

std::vector<double> uniform_edges(double a, double b, int panels);

// Sorted union of edge lists, deduplicated; used to refine panels around
// features with small support.
std::vector<double> merge_edges(std::vector<double> edges);

QuadRule gl_panels(const std::vector<double>& edges, int nodes_per_panel = 64);

}  // namespace qctrl
