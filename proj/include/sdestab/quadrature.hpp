#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sdestab {

// Tolerances and grids shared by the integral / sup-norm routines.
struct QuadratureSpec {
  double rel_tol = 1e-6;
  double abs_tol = 1e-12;
  int max_depth = 15;        // adaptive bisection depth per panel
  int sup_grid_points = 2048;
  double clip_box = 8.0;     // half-width used when a sup grid must clip an
                             // unbounded domain around its breakpoints
};

// Adaptive Gauss-Kronrod integral of f over (lo, hi), lo/hi may be +-inf.
// The interval is pre-split at the given interior breakpoints so integrand
// kinks and jumps land on panel edges. Throws QuadratureFailure when the
// error estimate misses max(abs_tol, rel_tol * |result|).
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints,
                 const QuadratureSpec& spec = {});

// Piecewise-Chebyshev antiderivative table: after construction,
// table(x) evaluates int_lo^x f to roughly `tol` for x in [lo, hi]
// (clamped outside). Panels are refined by bisection until the Chebyshev
// tail of f decays below tol on each panel.
class CumulativeTable {
 public:
  CumulativeTable() = default;
  CumulativeTable(const std::function<double(double)>& f, double lo, double hi,
                  std::span<const double> breakpoints, double tol = 1e-10,
                  int min_cells = 1);

  double operator()(double x) const;
  double total() const { return total_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool empty() const { return panels_.empty(); }

 private:
  struct Panel {
    double a = 0, b = 0;
    double offset = 0;          // int_lo^a f
    std::vector<double> coef;   // Chebyshev coefficients of the antiderivative
  };
  void build_panel(const std::function<double(double)>& f, double a, double b,
                   double tol, int depth);

  std::vector<Panel> panels_;
  std::vector<double> edges_;
  double lo_ = 0, hi_ = 0, total_ = 0;
};

namespace detail {

// Chebyshev interpolation on [-1,1] through degree-n Lobatto nodes;
// returns coefficients d_k with p(t) = sum d_k T_k(t).
std::vector<double> chebyshev_fit(const std::function<double(double)>& g,
                                  int degree);
// Coefficients of the antiderivative of the series d on [-1,1], zero at t=-1.
std::vector<double> chebyshev_antiderivative(std::span<const double> d);
double clenshaw(std::span<const double> d, double t);

}  // namespace detail

}  // namespace sdestab
