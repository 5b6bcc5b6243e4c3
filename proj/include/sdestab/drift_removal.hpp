#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sdestab/coefficients.hpp"
#include "sdestab/rate_analysis.hpp"
#include "sdestab/sde_engine.hpp"

namespace sdestab {

struct ScaleOptions {
  double box_lo = -8.0, box_hi = 8.0;  // table range when the domain is wider
  int cells = 4096;
  double base_point = 0.0;  // s(base_point) = 0
  double table_tol = 1e-10;
};

// The drift-removing change of variable: s'(x) = exp(-2 int_base^x b/sigma^2),
// s(x) = int_base^x s', with monotone inverse and the transformed diffusion
// sigma_bar(y) = (sigma * s') o s^{-1}(y). Outside the table box, s' is
// frozen at the boundary value (exact whenever b vanishes there) and the
// extrapolation flag is raised. Zero drift short-circuits to the identity,
// bit-exact.
class ScaleFunction {
 public:
  ScaleFunction(std::optional<Coefficient> drift, Coefficient sigma,
                Interval domain = {}, ScaleOptions opts = {});

  double prime(double x) const;
  double value(double x) const;
  double inverse(double y) const;  // DomainError outside s(domain)
  double transformed_sigma(double y) const;

  bool is_identity() const { return identity_; }
  bool extrapolation_used() const { return extrapolated_->load(); }
  double c_s1() const { return c_s1_; }  // exp(-2 ||b/sigma^2||_L1)
  double c_s2() const { return c_s2_; }
  double epsilon_bar() const { return sigma_.epsilon * c_s1_; }
  Interval domain() const { return domain_; }
  Interval image() const;  // s(domain), endpoints by evaluation
  double base_point() const { return opts_.base_point; }
  const Coefficient& sigma() const { return sigma_; }
  const std::optional<Coefficient>& drift() const { return drift_; }

 private:
  double table_lo_ = 0, table_hi_ = 0;
  std::optional<Coefficient> drift_;
  Coefficient sigma_;
  Interval domain_;
  ScaleOptions opts_;
  bool identity_ = false;
  double c_s1_ = 1.0, c_s2_ = 1.0;
  CumulativeTable h_cum_;  // int b/sigma^2
  CumulativeTable s_cum_;  // int s'
  double h_base_ = 0, s_base_ = 0;
  std::vector<double> inv_edges_x_, inv_edges_s_;  // monotone lookup seed
  std::shared_ptr<std::atomic<bool>> extrapolated_;
};

struct LemmaReport {
  double epsilon_bar_floor = 0;     // min sigma_bar over the grid
  double epsilon_bar_bound = 0;     // epsilon * c_s1
  bool ellipticity_ok = false;
  double sprime_lipschitz = 0;      // max adjacent difference quotient
  double sprime_lipschitz_bound = 0;  // 2 ||b/sigma^2||_inf * c_s2
  bool lipschitz_ok = false;
  double pairwise_margin = 0;  // min |f_b(x)-f_b(y)| - |sb(x)-sb(y)|^2
  bool pairwise_ok = false;
  bool pass = false;
};

// Checks, on a grid, that the transformed diffusion stays in the same class:
// ellipticity floor epsilon*c_s1, the s' Lipschitz bound, and a pairwise
// squared-difference check against the constructed dominator
// f_b(y) = 2 c_s2^2 f(s^{-1}(y)) + linear part.
LemmaReport verify_invariance(const ScaleFunction& sf,
                              std::span<const double> grid);

struct TransformedDistances {
  std::vector<std::pair<std::int64_t, double>> values;  // (n, int |sb - sb_n|)
  RateFit fit;  // POWER model
};

// int over s_n(I) cap s(I) of |sigma_bar - sigma_bar_n| for each n, plus the
// fitted C*n^-q (q should stay near 1 when the untransformed family obeys
// the combined L1 law).
TransformedDistances transformed_family_distance(
    const CoefficientFamily& family, std::span<const std::int64_t> n_list,
    const ScaleOptions& opts = {}, const QuadratureSpec& quad = {});

// For each h: mean over replicas of sup_k |s(X_k) - Xbar_k| where X is the
// drifted scheme mapped through s and Xbar the driftless scheme with
// sigma_bar, both on the same increments (coarser levels are pairwise sums
// of the finest stream when the steps are nested powers).
std::vector<std::pair<double, double>> roundtrip_drift_removal(
    const SimSpec& drifted, std::span<const double> h_list,
    std::size_t replicas, std::uint64_t seed, const ExecPolicy& exec = {},
    const ScaleOptions& opts = {});

}  // namespace sdestab
