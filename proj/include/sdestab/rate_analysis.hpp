#pragma once

#include <cstdint>
#include <span>

namespace sdestab {

// Rate laws fitted against measured errors.
enum class RateModel { LOG_POWER, POWER };  // C*(log n)^-q  |  C*n^-q

struct RatePoint {
  std::int64_t n = 0;
  double value = 0.0;
  double ci = 0.0;  // 95% half-width; 0 when not available
};

struct RateFit {
  RateModel model = RateModel::LOG_POWER;
  double C = 0.0;
  double q = 0.0;
  double r_squared = 0.0;
  std::int64_t n_min = 0, n_max = 0;
};

// Ordinary least squares in linearized coordinates
// (log value vs log log n for LOG_POWER, log value vs log n for POWER).
// Needs >= 4 points with distinct n > 2 and positive values.
RateFit fit_log_rate(std::span<const RatePoint> points, RateModel model);

enum class Verdict { CONSISTENT, VIOLATED };

struct BoundVerdict {
  Verdict status = Verdict::CONSISTENT;
  std::int64_t witness_n = 0;  // first offending n when VIOLATED
  double c_hat = 0.0;          // max_n value*(log n)^q
  double safety = 1.5;
  double q_claimed = 0.0;
};

// Shape-compatibility test of an upper bound value_n <= C*(log n)^-q.
// Small errors can never refute an upper bound, so the test only flags
// regrowth: with g_n = value_n*(log n)^q in increasing n, the claim is
// VIOLATED when some later (value_n + ci_n)*(log n)^q exceeds
// safety * min over earlier g. C_hat = max_n g_n is reported either way.
BoundVerdict bound_verdict(std::span<const RatePoint> points, double q_claimed,
                           double safety = 1.5);

// Claimed sup-norm exponent p/(4(p+1)) for moment order p.
double supnorm_exponent(double p);
// Claimed exponent (alpha-1)/2 for the heavy-tail driver.
double stable_exponent(double alpha);

namespace detail {
// slope/intercept/R^2 of OLS y = a + b x; R^2 = 1 for constant y.
struct Ols {
  double intercept = 0, slope = 0, r_squared = 1.0;
};
Ols ols(std::span<const double> x, std::span<const double> y);
}  // namespace detail

}  // namespace sdestab
