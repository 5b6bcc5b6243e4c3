#include "sdestab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sdestab/errors.hpp"

namespace sdestab {

namespace detail {

std::vector<double> chebyshev_fit(const std::function<double(double)>& g,
                                  int degree) {
  const int n = degree;
  std::vector<double> v(n + 1);
  for (int j = 0; j <= n; ++j) v[j] = g(std::cos(M_PI * j / n));
  std::vector<double> d(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double acc = 0.5 * (v[0] + (k % 2 == 0 ? v[n] : -v[n]));
    for (int j = 1; j < n; ++j) acc += v[j] * std::cos(M_PI * j * k / n);
    d[k] = 2.0 * acc / n;
  }
  d[0] *= 0.5;
  d[n] *= 0.5;
  return d;
}

std::vector<double> chebyshev_antiderivative(std::span<const double> d) {
  const int n = static_cast<int>(d.size()) - 1;
  auto at = [&](int k) { return k <= n ? d[k] : 0.0; };
  std::vector<double> a(n + 2, 0.0);
  if (n >= 0) a[1] = at(0) - 0.5 * at(2);
  for (int k = 2; k <= n + 1; ++k) a[k] = (at(k - 1) - at(k + 1)) / (2.0 * k);
  double at_m1 = 0.0;
  for (int k = 1; k <= n + 1; ++k) at_m1 += (k % 2 == 0 ? a[k] : -a[k]);
  a[0] = -at_m1;
  return a;
}

double clenshaw(std::span<const double> d, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = static_cast<int>(d.size()) - 1; k >= 1; --k) {
    double b0 = d[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return d[0] + t * b1 - b2;
}

namespace {

// Sorted, deduplicated panel edge list: lo, the breakpoints strictly inside
// (lo, hi), and hi. Infinite lo/hi are legal edges for the adaptive rule.
std::vector<double> panel_edges(double lo, double hi,
                                std::span<const double> breakpoints) {
  std::vector<double> e;
  e.push_back(lo);
  for (double b : breakpoints)
    if (std::isfinite(b) && b > lo && b < hi) e.push_back(b);
  e.push_back(hi);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

}  // namespace

}  // namespace detail

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints,
                 const QuadratureSpec& spec) {
  if (!(lo < hi)) throw InvalidInput("integrate: empty interval");
  using boost::math::quadrature::gauss_kronrod;
  const auto edges = detail::panel_edges(lo, hi, breakpoints);
  double total = 0.0, err_total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0;
    total += gauss_kronrod<double, 15>::integrate(
        f, edges[i], edges[i + 1], spec.max_depth, spec.rel_tol, &err);
    err_total += err;
  }
  const double budget =
      std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
  if (!std::isfinite(total) || err_total > 10.0 * budget)
    throw QuadratureFailure("integrate: error estimate " +
                            std::to_string(err_total) +
                            " misses tolerance " + std::to_string(budget));
  return total;
}

CumulativeTable::CumulativeTable(const std::function<double(double)>& f,
                                 double lo, double hi,
                                 std::span<const double> breakpoints,
                                 double tol, int min_cells) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw InvalidInput("CumulativeTable: need a finite interval lo < hi");
  lo_ = lo;
  hi_ = hi;
  const auto coarse = detail::panel_edges(lo, hi, breakpoints);
  for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
    const double a = coarse[i], b = coarse[i + 1];
    const double width = (b - a);
    const int cells = std::max(
        1, static_cast<int>(std::ceil(width / (hi - lo) * min_cells)));
    for (int c = 0; c < cells; ++c)
      build_panel(f, a + width * c / cells, a + width * (c + 1) / cells, tol,
                  0);
  }
  double run = 0.0;
  for (auto& p : panels_) {
    p.offset = run;
    run += detail::clenshaw(p.coef, 1.0);
    edges_.push_back(p.a);
  }
  edges_.push_back(hi_);
  total_ = run;
}

void CumulativeTable::build_panel(const std::function<double(double)>& f,
                                  double a, double b, double tol, int depth) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  // Sample strictly inside (a, b): panel edges may sit exactly on declared
  // discontinuities, where the fit must see this panel's one-sided limit.
  const double in_lo = std::nextafter(a, b), in_hi = std::nextafter(b, a);
  for (int degree : {16, 32, 64}) {
    auto d = detail::chebyshev_fit(
        [&](double t) {
          return f(std::clamp(mid + half * t, in_lo, in_hi));
        },
        degree);
    double scale = 0.0;
    for (double c : d) scale = std::max(scale, std::abs(c));
    const double tail = std::max(std::abs(d[degree]), std::abs(d[degree - 1]));
    if (tail <= tol * std::max(scale, 1e-300) || scale == 0.0) {
      auto anti = detail::chebyshev_antiderivative(d);
      for (auto& c : anti) c *= half;  // dx = half * dt
      panels_.push_back({a, b, 0.0, std::move(anti)});
      return;
    }
  }
  if (depth >= 12)
    throw QuadratureFailure("CumulativeTable: panel refinement stalled");
  build_panel(f, a, mid, tol, depth + 1);
  build_panel(f, mid, b, tol, depth + 1);
}

double CumulativeTable::operator()(double x) const {
  if (panels_.empty()) throw InvalidInput("CumulativeTable: empty table");
  if (x <= lo_) return 0.0;
  if (x >= hi_) return total_;
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - edges_.begin());
  idx = std::min(idx == 0 ? 0 : idx - 1, panels_.size() - 1);
  const Panel& p = panels_[idx];
  const double t = (2.0 * x - (p.a + p.b)) / (p.b - p.a);
  return p.offset + detail::clenshaw(p.coef, std::clamp(t, -1.0, 1.0));
}

}  // namespace sdestab
