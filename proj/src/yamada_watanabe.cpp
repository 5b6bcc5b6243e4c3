#include "sdestab/yamada_watanabe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sdestab/errors.hpp"

namespace sdestab {

double yw_a(int m) {
  if (m < 0) throw InvalidInput("yw_a: m must be >= 0");
  return std::exp(-0.5 * static_cast<double>(m) * (m + 1));
}

int select_level(std::int64_t n) {
  if (n <= 2) throw InvalidInput("select_level: n must exceed 2");
  const double ln_n = std::log(static_cast<double>(n));
  // closed-form guess for the largest m with m(m+1)/2 <= ln n, then fix up
  // with the same predicate a(m)*n >= 1 the definition uses
  int m = std::max(
      1, static_cast<int>(std::floor(0.5 * (std::sqrt(1.0 + 8.0 * ln_n) - 1.0))));
  const double nd = static_cast<double>(n);
  while (yw_a(m + 1) * nd >= 1.0) ++m;
  while (m > 1 && yw_a(m) * nd < 1.0) --m;
  return m;
}

double k_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw InvalidInput("k_alpha: alpha must lie in (1,2)");
  return -boost::math::tgamma(alpha) * std::cos(alpha * M_PI / 2.0) / 2.0;
}

double theoretical_bound(std::int64_t n, int m, double c_jy,
                         double c_jsigma) {
  if (n <= 2) throw InvalidInput("theoretical_bound: n must exceed 2");
  if (m < 1) throw InvalidInput("theoretical_bound: m must be >= 1");
  if (c_jy < 0 || c_jsigma < 0)
    throw InvalidInput("theoretical_bound: constants must be >= 0");
  const double md = static_cast<double>(m);
  return yw_a(m - 1) + 2.0 * c_jy / md +
         2.0 * c_jsigma / (md * yw_a(m) * static_cast<double>(n));
}

YWLevel::YWLevel(int m, double bump_plateau_fraction)
    : YWLevel(m, yw_a(m), yw_a(m - 1), bump_plateau_fraction) {}

YWLevel::YWLevel(int m, double a_m, double a_prev,
                 double bump_plateau_fraction)
    : m_(m), a_m_(a_m), a_prev_(a_prev), w_(bump_plateau_fraction) {
  if (m < 1) throw InvalidInput("YWLevel: m must be >= 1");
  if (!(0.0 < a_m && a_m < a_prev))
    throw InvalidInput("YWLevel: need 0 < a_m < a_prev");
  if (!(w_ > 0.0 && w_ < 0.5))
    throw InvalidInput("YWLevel: plateau fraction must lie in (0, 0.5)");
  const double log_ratio = std::log(a_prev / a_m);
  if (std::abs(log_ratio - m) > 1e-12 * m)
    throw InvalidInput("YWLevel: ln(a_prev/a_m) must equal m");
  norm_ = 1.0 - w_;  // integral of the trapezoid profile over (0,1)
  build_tables();
}

// C^2 trapezoid on (0,1): quintic smoothstep ramps of width w, plateau 1.
double YWLevel::ramp(double t) const {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double u;
  if (t < w_)
    u = t / w_;
  else if (t > 1.0 - w_)
    u = (1.0 - t) / w_;
  else
    return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double YWLevel::phi(double x) const {
  const double ax = std::abs(x);
  if (ax <= a_m_ || ax >= a_prev_) return 0.0;
  const double t = std::log(ax / a_m_) / m_;
  return ramp(t) / (norm_ * m_ * ax);
}

void YWLevel::build_tables() {
  // Panel edges: geometric e-folds so the 1/x factor stays tame, plus the
  // two ramp junctions where smoothness drops to C^2.
  std::vector<double> edges;
  for (int j = 1; j < m_; ++j) edges.push_back(a_m_ * std::exp(double(j)));
  edges.push_back(a_m_ * std::exp(w_ * m_));
  edges.push_back(a_m_ * std::exp((1.0 - w_) * m_));
  std::sort(edges.begin(), edges.end());
  auto phi_fn = [this](double x) { return phi(x); };
  phi_cum_ = CumulativeTable(phi_fn, a_m_, a_prev_, edges, 1e-11);
  auto phi_int = [this](double x) { return phi_cum_(x); };
  u_cum_ = CumulativeTable(phi_int, a_m_, a_prev_, edges, 1e-11);
}

double YWLevel::phi_mass() const { return phi_cum_.total(); }

double YWLevel::u(double x) const {
  const double ax = std::abs(x);
  if (ax <= a_m_) return 0.0;
  if (ax >= a_prev_)
    // outer slope is exactly the per-side mass 1
    return u_cum_.total() + (ax - a_prev_);
  return u_cum_(ax);
}

double YWLevel::u_prime(double x) const {
  const double ax = std::abs(x);
  double slope;
  if (ax <= a_m_)
    slope = 0.0;
  else if (ax >= a_prev_)
    slope = 1.0;
  else
    slope = std::clamp(phi_cum_(ax), 0.0, 1.0);
  return x < 0 ? -slope : slope;
}

double YWLevel::v(double alpha, double x) const {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw InvalidInput("YWLevel::v: alpha must lie in (1,2)");
  const double am1 = alpha - 1.0;
  // kernel phi/2 has total mass 1 over both lobes; by symmetry integrate the
  // positive lobe against both shifts
  auto integrand = [&](double z) {
    return 0.5 * phi(z) *
           (std::pow(std::abs(x - z), am1) + std::pow(std::abs(x + z), am1));
  };
  std::vector<double> edges = {a_m_, a_m_ * std::exp(w_ * m_),
                               a_m_ * std::exp((1.0 - w_) * m_), a_prev_};
  const double ax = std::abs(x);
  if (ax > a_m_ && ax < a_prev_) edges.push_back(ax);  // kink of |x -+ z|
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  // The |x -+ z|^{alpha-1} kink always lands on a panel edge, where bisecting
  // Gauss-Kronrod stalls; the double-exponential rule keeps converging
  // through algebraic endpoint singularities.
  boost::math::quadrature::tanh_sinh<double> rule;
  double total = 0.0, worst_rel_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    try {
      total += rule.integrate(integrand, edges[i], edges[i + 1], 1e-10, &err,
                              &l1);
    } catch (const std::exception& e) {
      throw QuadratureFailure(std::string("YWLevel::v: ") + e.what());
    }
    worst_rel_err = std::max(worst_rel_err, err);
  }
  if (!std::isfinite(total) || worst_rel_err > 1e-7)
    throw QuadratureFailure("YWLevel::v: quadrature error " +
                            std::to_string(worst_rel_err) +
                            " misses tolerance");
  return total;
}

}  // namespace sdestab
