#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sdestab/coefficients.hpp"
#include "sdestab/noise.hpp"

namespace sdestab {

// One scalar SDE dX = b(X)dt + sigma(X-)dW on [0, horizon_T], Euler left
// point evaluation, fixed step.
struct SimSpec {
  std::optional<Coefficient> drift;
  Coefficient diffusion;
  double x0 = 0.0;
  double horizon_T = 1.0;
  double step_h = 1.0 / 16384;
  Driver driver = Driver::WIENER;
  double alpha = 0.0;  // stable index when driver == STABLE
  std::size_t steps() const;
};

// Limit and member paths on one shared noise, plus their difference.
struct CoupledPathPair {
  std::vector<double> grid;     // t_k
  std::vector<double> x_path;   // limit
  std::vector<double> xn_path;  // member
  std::vector<double> y_path;   // x - xn
  NoiseKey noise_key;
};

struct ErrorEstimate {
  std::int64_t n = 0;
  double p = 1.0;
  double terminal_error = 0.0, terminal_ci = 0.0;  // mean |Y_T|^p, 95% band
  double sup_error = 0.0, sup_ci = 0.0;            // mean sup_t |Y_t|^p
  std::size_t replicas = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
};

struct ExecPolicy {
  int threads = 1;  // 0 = hardware concurrency
};

// Euler-Maruyama path (length steps+1, starts at x0). Throws
// SimulationAbort with the step index on non-finite values.
std::vector<double> euler_maruyama(const SimSpec& spec,
                                   const NoisePath& noise);

// The spec's driver/h/T materialized for a given key.
NoisePath generate_noise(const SimSpec& spec, NoiseKey key);

// Both systems driven by the identical regenerated stream; specs must share
// x0, horizon, step and driver.
CoupledPathPair coupled_simulate(const SimSpec& spec_limit,
                                 const SimSpec& spec_n, NoiseKey key);

// Monte Carlo strong-error estimates across replica-indexed keys; the same
// keys are reused for every n (common random numbers).
std::vector<ErrorEstimate> estimate_strong_error(
    const CoefficientFamily& family, std::span<const std::int64_t> n_list,
    double p, std::size_t replicas, const SimSpec& tmpl, std::uint64_t seed,
    const ExecPolicy& exec = {});

// Full battery: several moment orders p from one set of simulated paths,
// plus (optionally) the same battery re-run with halved step built from the
// SAME underlying fine increments, so the h-robustness comparison isolates
// the discretization effect from Monte Carlo noise.
struct BatteryRequest {
  std::vector<std::int64_t> n_list;
  std::vector<double> p_list;
  std::size_t replicas = 10000;
  std::uint64_t seed = 0;
  bool halving = true;
};
struct BatteryResult {
  // index [i_p * n_count + i_n]
  std::vector<ErrorEstimate> main;
  std::vector<ErrorEstimate> halved;  // empty when halving == false
  double max_rel_change = 0.0;        // across all estimates and both metrics
};
BatteryResult run_stability_battery(const CoefficientFamily& family,
                                    const BatteryRequest& request,
                                    const SimSpec& tmpl,
                                    const ExecPolicy& exec = {});

// Occupation estimate of the local time at level a:
// (1/(2 bw)) * sum_k 1_{|X_k - a| <= bw} sigma(X_k)^2 h.
double local_time(std::span<const double> path, const Coefficient& sigma,
                  double h, double a, double bandwidth);

// |X_T - a| - |X_0 - a| - sum_k sign(X_k - a) dX_k: the martingale-corrected
// estimate of the same local time.
double tanaka_local_time(std::span<const double> path, double a);

// Default kernel width matched to the one-step displacement scale.
double default_bandwidth(double h);

// Time-discretized int g(X_s) sigma^2(X_s) ds minus int g(a) L^a da with the
// occupation local-time estimator; small in mean for bounded compactly
// supported g on [g_lo, g_hi].
double occupation_residual(std::span<const double> path,
                           const std::function<double(double)>& g,
                           double g_lo, double g_hi, const Coefficient& sigma,
                           double h, double bandwidth);

// max over theta in {0, 1/2, 1} and a in a_grid of the empirical p-th moment
// of the local-time estimator of the interpolated path X + theta (X_n - X);
// finiteness/stability diagnostic.
double moment_diagnostic_cL(const CoefficientFamily& family, std::int64_t n,
                            double p, std::span<const double> a_grid,
                            std::size_t replicas, const SimSpec& tmpl,
                            std::uint64_t seed);

}  // namespace sdestab
