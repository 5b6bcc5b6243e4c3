#include "sdestab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdestab/errors.hpp"

namespace sdestab {

namespace {

constexpr double kTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

ConditionReport check_power_condition(const Coefficient& sigma, double alpha,
                                      std::span<const double> grid) {
  if (grid.size() < 2)
    throw InvalidInput("condition check: grid needs at least 2 points");
  if (!sigma.eval) throw InvalidInput("condition check: coefficient has no eval");

  std::vector<double> xs(grid.begin(), grid.end());
  std::sort(xs.begin(), xs.end());
  const std::size_t g = xs.size();
  std::vector<double> se(g), fe(g);
  for (std::size_t i = 0; i < g; ++i) {
    se[i] = sigma.eval(xs[i]);
    fe[i] = sigma.dominator_f ? sigma.dominator_f(xs[i]) : 0.0;
  }

  ConditionReport report;
  report.alpha = alpha;
  report.tol = kTol;
  report.min_eval = kInf;
  for (std::size_t i = 0; i < g; ++i)
    report.min_eval = std::min(report.min_eval, se[i]);
  report.ellipticity_ok = report.min_eval >= sigma.epsilon - kTol;

  for (std::size_t i = 0; i + 1 < g; ++i) {
    if (fe[i + 1] < fe[i] - kTol) {
      report.monotone_ok = false;
      report.monotone_witness_x = xs[i];
      report.monotone_witness_y = xs[i + 1];
      break;
    }
  }

  const bool squared = alpha == 2.0;
  double worst = -kInf;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      const double d = std::abs(se[i] - se[j]);
      const double lhs = squared ? d * d : std::pow(d, alpha);
      const double violation = lhs - std::abs(fe[i] - fe[j]);
      if (violation > worst) {
        worst = violation;
        report.witness_x = xs[i];
        report.witness_y = xs[j];
      }
    }
  }
  report.worst_violation = worst;
  report.pass =
      report.ellipticity_ok && report.monotone_ok && worst <= kTol;
  return report;
}

}  // namespace

bool Interval::finite() const {
  return std::isfinite(lo) && std::isfinite(hi);
}

ConditionReport check_nakao_legall(const Coefficient& sigma,
                                   std::span<const double> grid) {
  return check_power_condition(sigma, 2.0, grid);
}

ConditionReport check_belfadli_ouknine(const Coefficient& sigma, double alpha,
                                       std::span<const double> grid) {
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw InvalidInput("check_belfadli_ouknine: alpha must lie in (1,2]");
  return check_power_condition(sigma, alpha, grid);
}

std::vector<double> default_check_grid(const Coefficient& coef,
                                       Interval domain, int points) {
  if (points < 2) throw InvalidInput("default_check_grid: points < 2");
  double lo = domain.lo, hi = domain.hi;
  const auto& disc = coef.discontinuity_points;
  if (!std::isfinite(lo))
    lo = (disc.empty() ? 0.0 : disc.front()) - QuadratureSpec{}.clip_box;
  if (!std::isfinite(hi))
    hi = (disc.empty() ? 0.0 : disc.back()) + QuadratureSpec{}.clip_box;
  if (!(lo < hi)) throw InvalidInput("default_check_grid: empty domain");

  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points) + 2 * disc.size());
  for (int i = 0; i < points; ++i)
    grid.push_back(lo + (hi - lo) * i / (points - 1));
  for (double d : disc) {
    if (d <= lo || d >= hi) continue;
    grid.push_back(std::nextafter(d, -kInf));
    grid.push_back(std::nextafter(d, kInf));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  // keep the grid clear of the declared discontinuities themselves
  std::erase_if(grid, [&](double x) {
    return std::binary_search(disc.begin(), disc.end(), x);
  });
  return grid;
}

double coefficient_distance(const Coefficient& a, const Coefficient& b,
                            DistanceMode mode, Interval domain,
                            const QuadratureSpec& quad) {
  if (!a.eval || !b.eval)
    throw InvalidInput("coefficient_distance: coefficient has no eval");
  std::vector<double> splits = a.discontinuity_points;
  splits.insert(splits.end(), b.discontinuity_points.begin(),
                b.discontinuity_points.end());
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());

  if (mode == DistanceMode::SUP) {
    Coefficient merged;  // union of both discontinuity lists for the grid
    merged.discontinuity_points = splits;
    auto grid = default_check_grid(merged, domain, quad.sup_grid_points);
    // the jump points themselves are legal evaluation sites here
    for (double d : splits)
      if (d > domain.lo && d < domain.hi) grid.push_back(d);
    double sup = 0.0;
    for (double x : grid)
      sup = std::max(sup, std::abs(a.eval(x) - b.eval(x)));
    return sup;
  }

  auto integrand = [&](double x) {
    const double d = std::abs(a.eval(x) - b.eval(x));
    return mode == DistanceMode::L1 ? d : d * d;
  };
  return integrate(integrand, domain.lo, domain.hi, splits, quad);
}

CoefficientFamily mollified_jump_family(double low, double high,
                                        double jump_at) {
  if (!(0.0 < low && low < high))
    throw InvalidInput("mollified_jump_family: need 0 < low < high");
  auto limit_eval = [low, high, jump_at](double x) {
    return x >= jump_at ? high : low;
  };
  Coefficient limit;
  limit.eval = limit_eval;
  limit.epsilon = low;
  limit.sup_bound = high;
  limit.discontinuity_points = {jump_at};
  limit.dominator_f = [limit_eval](double x) {
    const double s = limit_eval(x);
    return s * s;
  };

  CoefficientFamily family;
  family.name = "mollified_jump";
  family.limit_sigma = limit;
  family.member = [low, high, jump_at](std::int64_t n) {
    if (n < 1) throw InvalidInput("mollified_jump_family: member index n < 1");
    const double width = 1.0 / static_cast<double>(n);
    auto eval = [low, high, jump_at, width](double x) {
      if (x < jump_at) return low;
      if (x >= jump_at + width) return high;
      return low + (high - low) * (x - jump_at) / width;
    };
    Coefficient c;
    c.eval = eval;
    c.epsilon = low;
    c.sup_bound = high;
    c.discontinuity_points = {jump_at, jump_at + width};  // kinks
    c.dominator_f = [eval](double x) {
      const double s = eval(x);
      return s * s;
    };
    return c;
  };
  family.rate_constant_C0 = (high - low) * (high - low) / 3.0;
  family.distance_mode = DistanceMode::L2_SQUARED;
  family.domain = {jump_at - 8.0, jump_at + 8.0};
  return family;
}

CoefficientFamily constant_shift_family(double sigma0) {
  if (!(sigma0 > 0.0))
    throw InvalidInput("constant_shift_family: sigma0 must be positive");
  auto make_const = [](double value, double floor) {
    Coefficient c;
    c.eval = [value](double) { return value; };
    c.epsilon = floor;
    c.sup_bound = value;
    c.dominator_f = [value](double) { return value * value; };
    return c;
  };
  CoefficientFamily family;
  family.name = "constant_shift";
  family.limit_sigma = make_const(sigma0, sigma0);
  family.member = [make_const, sigma0](std::int64_t n) {
    if (n < 1) throw InvalidInput("constant_shift_family: member index n < 1");
    return make_const(sigma0 + 1.0 / static_cast<double>(n), sigma0);
  };
  family.rate_constant_C0 = 1.0;
  family.distance_mode = DistanceMode::SUP;
  family.domain = {-8.0, 8.0};
  return family;
}

CoefficientFamily with_drift(CoefficientFamily family, Coefficient b) {
  family.limit_b = b;
  family.member_b = [b](std::int64_t) { return b; };
  return family;
}

Coefficient step_coefficient(double height, double lo, double hi) {
  if (!(lo < hi)) throw InvalidInput("step_coefficient: need lo < hi");
  Coefficient c;
  c.eval = [height, lo, hi](double x) {
    return (x >= lo && x < hi) ? height : 0.0;
  };
  c.epsilon = 0.0;
  c.sup_bound = std::abs(height);
  c.discontinuity_points = {lo, hi};
  c.dominator_f = [](double) { return 0.0; };
  return c;
}

RateFit fit_family_rate(const CoefficientFamily& family,
                        std::span<const std::int64_t> n_list,
                        const QuadratureSpec& quad) {
  std::vector<std::int64_t> ns(n_list.begin(), n_list.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3)
    throw InvalidInput("fit_family_rate: need >= 3 distinct n");

  std::vector<double> lx, ly;
  RateFit fit;
  fit.model = RateModel::POWER;
  fit.n_min = ns.front();
  fit.n_max = ns.back();
  for (std::int64_t n : ns) {
    const double d = coefficient_distance(family.member(n),
                                          family.limit_sigma,
                                          family.distance_mode,
                                          family.domain, quad);
    if (d <= 0.0) {  // exact family: degenerate fit sentinel
      fit.C = 0.0;
      fit.q = std::numeric_limits<double>::infinity();
      fit.r_squared = 1.0;
      return fit;
    }
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(d));
  }
  const auto o = detail::ols(lx, ly);
  fit.C = std::exp(o.intercept);
  fit.q = -o.slope;
  fit.r_squared = o.r_squared;
  return fit;
}

}  // namespace sdestab
