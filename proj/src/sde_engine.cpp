#include "sdestab/sde_engine.hpp"

#include <algorithm>
#include <cmath>

#include "sdestab/detail/parallel.hpp"
#include "sdestab/errors.hpp"

namespace sdestab {

std::size_t SimSpec::steps() const {
  if (!(step_h > 0.0) || !(horizon_T > 0.0))
    throw InvalidInput("SimSpec: step and horizon must be positive");
  if (step_h > horizon_T)
    throw InvalidInput("SimSpec: step exceeds horizon");
  const double ratio = horizon_T / step_h;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
    throw InvalidInput("SimSpec: step must divide the horizon");
  return n;
}

NoisePath generate_noise(const SimSpec& spec, NoiseKey key) {
  const std::size_t steps = spec.steps();
  if (spec.driver == Driver::WIENER)
    return brownian_increments(spec.step_h, steps, key.seed, key.replica_id,
                               key.stream_id);
  return stable_increments(spec.alpha, spec.step_h, steps, key.seed,
                           key.replica_id, key.stream_id);
}

namespace {

void check_noise_matches(const SimSpec& spec, const NoisePath& noise) {
  if (noise.driver != spec.driver)
    throw InvalidInput("euler_maruyama: noise driver mismatch");
  if (std::abs(noise.step_h - spec.step_h) >
      1e-12 * std::max(noise.step_h, spec.step_h))
    throw InvalidInput("euler_maruyama: noise step mismatch");
  if (noise.increments.size() != spec.steps())
    throw InvalidInput("euler_maruyama: noise length mismatch");
}

// Streaming Euler step loop: calls visit(k, x_k) for k = 0..steps before each
// increment is applied, returns the terminal state.
template <typename Visit>
double euler_walk(const Coefficient* drift, const Coefficient& diffusion,
                  double x0, double h, std::span<const double> increments,
                  Visit&& visit) {
  double x = x0;
  const std::size_t steps = increments.size();
  for (std::size_t k = 0; k < steps; ++k) {
    visit(k, x);
    const double s = diffusion.eval(x);
    double next = x + s * increments[k];
    if (drift) next += drift->eval(x) * h;
    if (!std::isfinite(next))
      throw SimulationAbort("euler_maruyama: non-finite state", k);
    x = next;
  }
  visit(steps, x);
  return x;
}

}  // namespace

std::vector<double> euler_maruyama(const SimSpec& spec,
                                   const NoisePath& noise) {
  check_noise_matches(spec, noise);
  std::vector<double> path(noise.increments.size() + 1);
  euler_walk(spec.drift ? &*spec.drift : nullptr, spec.diffusion, spec.x0,
             spec.step_h, noise.increments,
             [&](std::size_t k, double x) { path[k] = x; });
  return path;
}

CoupledPathPair coupled_simulate(const SimSpec& spec_limit,
                                 const SimSpec& spec_n, NoiseKey key) {
  if (spec_limit.x0 != spec_n.x0 ||
      spec_limit.horizon_T != spec_n.horizon_T ||
      spec_limit.step_h != spec_n.step_h ||
      spec_limit.driver != spec_n.driver ||
      (spec_limit.driver == Driver::STABLE &&
       spec_limit.alpha != spec_n.alpha))
    throw InvalidInput(
        "coupled_simulate: specs must share x0, horizon, step and driver");
  const NoisePath noise = generate_noise(spec_limit, key);
  CoupledPathPair pair;
  pair.noise_key = key;
  pair.x_path = euler_maruyama(spec_limit, noise);
  pair.xn_path = euler_maruyama(spec_n, noise);
  const std::size_t len = pair.x_path.size();
  pair.grid.resize(len);
  pair.y_path.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    pair.grid[k] = static_cast<double>(k) * spec_limit.step_h;
    pair.y_path[k] = pair.x_path[k] - pair.xn_path[k];
  }
  return pair;
}

namespace {

// Per-level raw coupling errors, slot [i_n * replicas + r].
struct RawLevel {
  double h = 0;
  std::size_t replicas = 0;
  std::vector<double> abs_terminal, abs_sup;
};

struct MemberSet {
  std::vector<Coefficient> sigma;
  std::vector<Coefficient> drift;  // empty when family has no member drift
};

MemberSet materialize_members(const CoefficientFamily& family,
                              std::span<const std::int64_t> n_list) {
  MemberSet set;
  for (std::int64_t n : n_list) set.sigma.push_back(family.member(n));
  if (family.member_b)
    for (std::int64_t n : n_list) set.drift.push_back(family.member_b(n));
  return set;
}

// Simulate the limit path into `limit_buf`, then every member against it,
// recording |Y_T| and sup_t |Y_t| into the level slots for replica r.
void run_one_replica(const SimSpec& tmpl, const CoefficientFamily& family,
                     const MemberSet& members, double h,
                     std::span<const double> increments, std::size_t r,
                     std::vector<double>& limit_buf, RawLevel& out) {
  const Coefficient* limit_drift =
      family.limit_b ? &*family.limit_b : nullptr;
  limit_buf.resize(increments.size() + 1);
  euler_walk(limit_drift, family.limit_sigma, tmpl.x0, h, increments,
             [&](std::size_t k, double x) { limit_buf[k] = x; });
  for (std::size_t i = 0; i < members.sigma.size(); ++i) {
    const Coefficient* member_drift =
        members.drift.empty() ? limit_drift : &members.drift[i];
    double sup = 0.0;
    const double terminal = euler_walk(
        member_drift, members.sigma[i], tmpl.x0, h, increments,
        [&](std::size_t k, double x) {
          sup = std::max(sup, std::abs(limit_buf[k] - x));
        });
    out.abs_terminal[i * out.replicas + r] =
        std::abs(limit_buf.back() - terminal);
    out.abs_sup[i * out.replicas + r] = sup;
  }
}

ErrorEstimate reduce_moment(const RawLevel& level, std::size_t i_n,
                            std::int64_t n, double p, double h,
                            std::uint64_t seed) {
  const std::size_t R = level.replicas;
  ErrorEstimate e;
  e.n = n;
  e.p = p;
  e.replicas = R;
  e.h = h;
  e.seed = seed;
  auto stats = [&](const std::vector<double>& raw, double& mean_out,
                   double& ci_out) {
    double sum = 0, sumsq = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const double v = std::pow(raw[i_n * R + r], p);
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(R);
    double var = 0.0;
    if (R > 1)
      var = std::max(0.0, (sumsq - static_cast<double>(R) * mean * mean) /
                              static_cast<double>(R - 1));
    mean_out = mean;
    ci_out = 1.96 * std::sqrt(var / static_cast<double>(R));
  };
  stats(level.abs_terminal, e.terminal_error, e.terminal_ci);
  stats(level.abs_sup, e.sup_error, e.sup_ci);
  return e;
}

}  // namespace

std::vector<ErrorEstimate> estimate_strong_error(
    const CoefficientFamily& family, std::span<const std::int64_t> n_list,
    double p, std::size_t replicas, const SimSpec& tmpl, std::uint64_t seed,
    const ExecPolicy& exec) {
  if (replicas < 2)
    throw InvalidInput("estimate_strong_error: need >= 2 replicas");
  if (!(p > 0)) throw InvalidInput("estimate_strong_error: p must be > 0");
  if (n_list.empty())
    throw InvalidInput("estimate_strong_error: empty n list");
  tmpl.steps();  // validate step/horizon compatibility up front
  const MemberSet members = materialize_members(family, n_list);
  RawLevel level;
  level.h = tmpl.step_h;
  level.replicas = replicas;
  level.abs_terminal.resize(n_list.size() * replicas);
  level.abs_sup.resize(n_list.size() * replicas);

  detail::parallel_for(replicas, exec.threads, [&](std::size_t r) {
    const NoisePath noise = generate_noise(
        tmpl, {seed, static_cast<std::uint32_t>(r), 0});
    std::vector<double> limit_buf;
    run_one_replica(tmpl, family, members, tmpl.step_h, noise.increments, r,
                    limit_buf, level);
  });

  std::vector<ErrorEstimate> out;
  for (std::size_t i = 0; i < n_list.size(); ++i)
    out.push_back(reduce_moment(level, i, n_list[i], p, tmpl.step_h, seed));
  return out;
}

BatteryResult run_stability_battery(const CoefficientFamily& family,
                                    const BatteryRequest& request,
                                    const SimSpec& tmpl,
                                    const ExecPolicy& exec) {
  if (request.n_list.empty() || request.p_list.empty())
    throw InvalidInput("run_stability_battery: empty n or p list");
  if (request.replicas < 2)
    throw InvalidInput("run_stability_battery: need >= 2 replicas");
  const std::size_t steps = tmpl.steps();
  const std::size_t n_count = request.n_list.size();
  const std::size_t R = request.replicas;
  const MemberSet members = materialize_members(family, request.n_list);

  RawLevel coarse, fine;
  coarse.h = tmpl.step_h;
  coarse.replicas = R;
  coarse.abs_terminal.resize(n_count * R);
  coarse.abs_sup.resize(n_count * R);
  if (request.halving) {
    fine.h = tmpl.step_h / 2.0;
    fine.replicas = R;
    fine.abs_terminal.resize(n_count * R);
    fine.abs_sup.resize(n_count * R);
  }

  SimSpec fine_tmpl = tmpl;
  fine_tmpl.step_h = tmpl.step_h / 2.0;

  detail::parallel_for(R, exec.threads, [&](std::size_t r) {
    std::vector<double> limit_buf;
    const NoiseKey key{request.seed, static_cast<std::uint32_t>(r), 0};
    if (!request.halving) {
      const NoisePath noise = generate_noise(tmpl, key);
      run_one_replica(tmpl, family, members, tmpl.step_h, noise.increments,
                      r, limit_buf, coarse);
      return;
    }
    // one fine stream drives both levels: pairwise sums are distributed
    // exactly as increments at the doubled step for both drivers
    const NoisePath fine_noise = generate_noise(fine_tmpl, key);
    std::vector<double> coarse_inc(steps);
    for (std::size_t k = 0; k < steps; ++k)
      coarse_inc[k] =
          fine_noise.increments[2 * k] + fine_noise.increments[2 * k + 1];
    run_one_replica(tmpl, family, members, tmpl.step_h, coarse_inc, r,
                    limit_buf, coarse);
    run_one_replica(tmpl, family, members, fine_tmpl.step_h,
                    fine_noise.increments, r, limit_buf, fine);
  });

  BatteryResult result;
  for (double p : request.p_list)
    for (std::size_t i = 0; i < n_count; ++i) {
      result.main.push_back(reduce_moment(coarse, i, request.n_list[i], p,
                                          coarse.h, request.seed));
      if (request.halving)
        result.halved.push_back(reduce_moment(fine, i, request.n_list[i], p,
                                              fine.h, request.seed));
    }
  if (request.halving) {
    for (std::size_t i = 0; i < result.main.size(); ++i) {
      const auto& a = result.main[i];
      const auto& b = result.halved[i];
      if (a.terminal_error > 0)
        result.max_rel_change =
            std::max(result.max_rel_change,
                     std::abs(a.terminal_error - b.terminal_error) /
                         a.terminal_error);
      if (a.sup_error > 0)
        result.max_rel_change =
            std::max(result.max_rel_change,
                     std::abs(a.sup_error - b.sup_error) / a.sup_error);
    }
  }
  return result;
}

double default_bandwidth(double h) { return 2.0 * std::sqrt(h); }

double local_time(std::span<const double> path, const Coefficient& sigma,
                  double h, double a, double bandwidth) {
  if (!(bandwidth > 0)) throw InvalidInput("local_time: bandwidth <= 0");
  if (path.size() < 2) throw InvalidInput("local_time: path too short");
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (std::abs(path[k] - a) <= bandwidth) {
      const double s = sigma.eval(path[k]);
      acc += s * s * h;
    }
  }
  return acc / (2.0 * bandwidth);
}

double tanaka_local_time(std::span<const double> path, double a) {
  if (path.size() < 2)
    throw InvalidInput("tanaka_local_time: path too short");
  double martingale = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double d = path[k] - a;
    const double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    martingale += sgn * (path[k + 1] - path[k]);
  }
  return std::abs(path.back() - a) - std::abs(path.front() - a) - martingale;
}

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1,1].
constexpr double kGl8X[8] = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975362};
constexpr double kGl8W[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

double gl8(const std::function<double(double)>& g, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) acc += kGl8W[i] * g(mid + half * kGl8X[i]);
  return acc * half;
}

}  // namespace

double occupation_residual(std::span<const double> path,
                           const std::function<double(double)>& g,
                           double g_lo, double g_hi, const Coefficient& sigma,
                           double h, double bandwidth) {
  if (!(bandwidth > 0))
    throw InvalidInput("occupation_residual: bandwidth <= 0");
  if (!(g_lo < g_hi))
    throw InvalidInput("occupation_residual: empty support");
  if (path.size() < 2)
    throw InvalidInput("occupation_residual: path too short");
  // sum_k g(X_k) sigma^2 h  minus  int g(a) L^a da; the latter reduces
  // exactly to a window average of g around each step
  double occupation = 0.0, smoothed = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double x = path[k];
    const double s = sigma.eval(x);
    const double weight = s * s * h;
    occupation += g(x) * weight;
    const double lo = std::max(x - bandwidth, g_lo);
    const double hi = std::min(x + bandwidth, g_hi);
    if (lo < hi) smoothed += weight / (2.0 * bandwidth) * gl8(g, lo, hi);
  }
  return occupation - smoothed;
}

double moment_diagnostic_cL(const CoefficientFamily& family, std::int64_t n,
                            double p, std::span<const double> a_grid,
                            std::size_t replicas, const SimSpec& tmpl,
                            std::uint64_t seed) {
  if (a_grid.empty())
    throw InvalidInput("moment_diagnostic_cL: empty level grid");
  if (replicas < 1)
    throw InvalidInput("moment_diagnostic_cL: need >= 1 replica");
  const Coefficient member = family.member(n);
  SimSpec limit_spec = tmpl;
  limit_spec.diffusion = family.limit_sigma;
  limit_spec.drift = family.limit_b;
  SimSpec member_spec = tmpl;
  member_spec.diffusion = member;
  if (family.member_b) member_spec.drift = family.member_b(n);
  const double bw = default_bandwidth(tmpl.step_h);
  const double thetas[3] = {0.0, 0.5, 1.0};
  std::vector<double> acc(3 * a_grid.size(), 0.0);

  for (std::size_t r = 0; r < replicas; ++r) {
    const auto pair = coupled_simulate(limit_spec, member_spec,
                                       {seed, static_cast<std::uint32_t>(r),
                                        0});
    for (int ti = 0; ti < 3; ++ti) {
      const double theta = thetas[ti];
      for (std::size_t ai = 0; ai < a_grid.size(); ++ai) {
        double lt = 0.0;
        for (std::size_t k = 0; k + 1 < pair.x_path.size(); ++k) {
          const double z =
              pair.x_path[k] + theta * (pair.xn_path[k] - pair.x_path[k]);
          if (std::abs(z - a_grid[ai]) <= bw) {
            const double mixed =
                (1.0 - theta) * family.limit_sigma.eval(pair.x_path[k]) +
                theta * member.eval(pair.xn_path[k]);
            lt += mixed * mixed * tmpl.step_h;
          }
        }
        acc[ti * a_grid.size() + ai] +=
            std::pow(lt / (2.0 * bw), p);
      }
    }
  }
  double worst = 0.0;
  for (double v : acc)
    worst = std::max(worst, v / static_cast<double>(replicas));
  return worst;
}

}  // namespace sdestab
