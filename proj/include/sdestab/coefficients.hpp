#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdestab/quadrature.hpp"
#include "sdestab/rate_analysis.hpp"

namespace sdestab {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool finite() const;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Scalar coefficient x -> value with the metadata the condition checks and
// transforms need: ellipticity floor, a monotone bounded dominator f with
// |sigma(x)-sigma(y)|^a <= |f(x)-f(y)|, a sup bound, and declared jump/kink
// locations for quadrature splitting.
struct Coefficient {
  std::function<double(double)> eval;
  double epsilon = 0.0;
  std::function<double(double)> dominator_f;  // may be empty (treated as 0)
  double sup_bound = std::numeric_limits<double>::infinity();
  std::vector<double> discontinuity_points;
};

enum class DistanceMode { L1, L2_SQUARED, SUP };

// A limit coefficient together with its approximating members sigma_n
// (optionally drifts b, b_n) and the distance law the family is built to
// satisfy: distance(member(n), limit) <= rate_constant_C0 / n.
struct CoefficientFamily {
  std::string name;
  Coefficient limit_sigma;
  std::function<Coefficient(std::int64_t)> member;
  std::optional<Coefficient> limit_b;
  std::function<Coefficient(std::int64_t)> member_b;  // may be empty
  double rate_constant_C0 = 0.0;
  DistanceMode distance_mode = DistanceMode::L2_SQUARED;
  Interval domain;
};

struct ConditionReport {
  bool pass = false;
  double alpha = 2.0;           // exponent of the difference test
  double worst_violation = 0.0; // max |s(x)-s(y)|^alpha - |f(x)-f(y)|
  double witness_x = 0.0, witness_y = 0.0;
  bool ellipticity_ok = true;
  double min_eval = 0.0;
  bool monotone_ok = true;      // dominator non-decreasing on the grid
  double monotone_witness_x = 0.0, monotone_witness_y = 0.0;
  double tol = 1e-12;
};

// Grid-based check of eps <= sigma and |sigma(x)-sigma(y)|^2 <= |f(x)-f(y)|
// over all grid pairs (absolute tolerance 1e-12). A non-monotone dominator
// fails the report rather than throwing.
ConditionReport check_nakao_legall(const Coefficient& sigma,
                                   std::span<const double> grid);
// Same with exponent alpha in place of 2; alpha in (1,2] (2 kept so the two
// checks can be compared decision-for-decision).
ConditionReport check_belfadli_ouknine(const Coefficient& sigma, double alpha,
                                       std::span<const double> grid);

// int |a-b| (L1), int |a-b|^2 (L2_SQUARED), or sup over a refinement grid
// (SUP), each to ~1e-6 relative accuracy, with panels split at declared
// discontinuities of either argument.
double coefficient_distance(const Coefficient& a, const Coefficient& b,
                            DistanceMode mode, Interval domain,
                            const QuadratureSpec& quad = {});

// 2048 equispaced points on the domain (clipped around the discontinuities
// when unbounded) plus both one-sided neighbours of each declared
// discontinuity; never contains a discontinuity point itself.
std::vector<double> default_check_grid(const Coefficient& coef,
                                       Interval domain, int points = 2048);

// limit = low + (high-low)*1_{[jump_at,inf)}, member(n) = the linear
// interpolation of the jump across [jump_at, jump_at + 1/n]; dominator
// f = sigma^2 (valid since |a-b|^2 <= |a^2-b^2| for positive a,b);
// L2_SQUARED distance is exactly (high-low)^2/(3n).
CoefficientFamily mollified_jump_family(double low, double high,
                                        double jump_at);

// limit = sigma0 constant, member(n) = sigma0 + 1/n; SUP distance 1/n.
CoefficientFamily constant_shift_family(double sigma0);

// Attach a shared drift b = b_n to every member of a family.
CoefficientFamily with_drift(CoefficientFamily family, Coefficient b);

// Indicator-step drift height*1_{[lo,hi)} with the metadata filled in.
Coefficient step_coefficient(double height, double lo, double hi);

// Least-squares fit of measured member-to-limit distances against C*n^-q.
// Any zero distance short-circuits to the exact-family sentinel q = inf.
RateFit fit_family_rate(const CoefficientFamily& family,
                        std::span<const std::int64_t> n_list,
                        const QuadratureSpec& quad = {});

}  // namespace sdestab
