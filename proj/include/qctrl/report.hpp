#pragma once

#include <string>
#include <vector>

namespace qctrl {

// Least-squares power-law fit log10 y = slope * log10 x + intercept.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error of the slope
  double r2 = 0.0;        // coefficient of determination
  int points = 0;
};

// Requires xs, ys strictly positive, equal sizes >= 3, and a non-degenerate
// abscissa spread; throws std::invalid_argument otherwise.
SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// log10(max/min) of a strictly positive grid.
double decades(const std::vector<double>& xs);

// CSV serialization: one header row, every value rendered with %.17g so the
// same data produces byte-identical files.
std::string csv_text(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Full %.17g rendering of one double (shared by CSV and JSON reports).
std::string format_full(double v);

}  // namespace qctrl
