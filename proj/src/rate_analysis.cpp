#include "sdestab/rate_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sdestab/errors.hpp"

namespace sdestab {

namespace detail {

Ols ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Ols o;
  o.slope = sxx > 0 ? sxy / sxx : 0.0;
  o.intercept = my - o.slope * mx;
  if (syy > 0) {
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (o.intercept + o.slope * x[i]);
      ss_res += r * r;
    }
    o.r_squared = 1.0 - ss_res / syy;
  }
  return o;
}

namespace {

std::vector<RatePoint> checked_sorted(std::span<const RatePoint> points) {
  if (points.size() < 4)
    throw InvalidInput("rate analysis: need >= 4 points");
  std::vector<RatePoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](const RatePoint& a, const RatePoint& b) { return a.n < b.n; });
  std::set<std::int64_t> seen;
  for (const auto& p : pts) {
    if (p.n <= 2)
      throw InvalidInput("rate analysis: every n must exceed 2");
    if (!(p.value > 0.0))
      throw InvalidInput("rate analysis: values must be positive");
    if (!seen.insert(p.n).second)
      throw InvalidInput("rate analysis: n values must be distinct");
  }
  return pts;
}

}  // namespace

}  // namespace detail

RateFit fit_log_rate(std::span<const RatePoint> points, RateModel model) {
  const auto pts = detail::checked_sorted(points);
  std::vector<double> x, y;
  x.reserve(pts.size());
  y.reserve(pts.size());
  for (const auto& p : pts) {
    const double ln_n = std::log(static_cast<double>(p.n));
    x.push_back(model == RateModel::LOG_POWER ? std::log(ln_n) : ln_n);
    y.push_back(std::log(p.value));
  }
  const auto o = detail::ols(x, y);
  RateFit fit;
  fit.model = model;
  fit.C = std::exp(o.intercept);
  fit.q = -o.slope;
  fit.r_squared = o.r_squared;
  fit.n_min = pts.front().n;
  fit.n_max = pts.back().n;
  return fit;
}

BoundVerdict bound_verdict(std::span<const RatePoint> points,
                           double q_claimed, double safety) {
  if (safety < 1.0) throw InvalidInput("bound_verdict: safety must be >= 1");
  const auto pts = detail::checked_sorted(points);
  BoundVerdict v;
  v.safety = safety;
  v.q_claimed = q_claimed;
  double running_min = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double shape = std::pow(std::log(static_cast<double>(pts[i].n)),
                                  q_claimed);
    const double g = pts[i].value * shape;
    v.c_hat = std::max(v.c_hat, g);
    if (i > 0 && v.status == Verdict::CONSISTENT) {
      const double upper = (pts[i].value + pts[i].ci) * shape;
      if (upper > safety * running_min) {
        v.status = Verdict::VIOLATED;
        v.witness_n = pts[i].n;
      }
    }
    running_min = i == 0 ? g : std::min(running_min, g);
  }
  return v;
}

double supnorm_exponent(double p) {
  if (!(p > 0)) throw InvalidInput("supnorm_exponent: p must be positive");
  return p / (4.0 * (p + 1.0));
}

double stable_exponent(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw InvalidInput("stable_exponent: alpha must lie in (1,2)");
  return (alpha - 1.0) / 2.0;
}

}  // namespace sdestab
