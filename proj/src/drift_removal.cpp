#include "sdestab/drift_removal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdestab/detail/parallel.hpp"
#include "sdestab/errors.hpp"

namespace sdestab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ScaleFunction::ScaleFunction(std::optional<Coefficient> drift,
                             Coefficient sigma, Interval domain,
                             ScaleOptions opts)
    : drift_(std::move(drift)),
      sigma_(std::move(sigma)),
      domain_(domain),
      opts_(opts),
      extrapolated_(std::make_shared<std::atomic<bool>>(false)) {
  if (!sigma_.eval) throw SetupError("scale: diffusion has no eval");
  if (!(sigma_.epsilon > 0.0))
    throw SetupError("scale: diffusion needs a positive ellipticity floor");
  table_lo_ = std::max(opts_.box_lo, domain_.lo);
  table_hi_ = std::min(opts_.box_hi, domain_.hi);
  if (!(table_lo_ < table_hi_))
    throw SetupError("scale: empty table range (domain vs box)");
  if (!(opts_.base_point >= table_lo_ && opts_.base_point <= table_hi_))
    throw SetupError("scale: base point outside the table range");

  if (!drift_) {
    identity_ = true;
    return;
  }
  if (!drift_->eval) throw SetupError("scale: drift has no eval");
  if (!std::isfinite(drift_->sup_bound))
    throw SetupError("scale: drift must be bounded for the transform");

  std::vector<double> splits = drift_->discontinuity_points;
  splits.insert(splits.end(), sigma_.discontinuity_points.begin(),
                sigma_.discontinuity_points.end());
  splits.push_back(opts_.base_point);
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());

  // identity fast path: a drift that is exactly zero on the whole range
  bool all_zero = true;
  const int probes = 512;
  for (int i = 0; i <= probes && all_zero; ++i)
    all_zero = drift_->eval(table_lo_ + (table_hi_ - table_lo_) * i /
                                            probes) == 0.0;
  for (double d : splits)
    if (all_zero && d > table_lo_ && d < table_hi_)
      all_zero = drift_->eval(d) == 0.0 &&
                 drift_->eval(std::nextafter(d, kInf)) == 0.0 &&
                 drift_->eval(std::nextafter(d, -kInf)) == 0.0;
  if (all_zero) {
    identity_ = true;
    return;
  }

  auto ratio = [this](double x) {
    const double s = sigma_.eval(x);
    return drift_->eval(x) / (s * s);
  };
  h_cum_ = CumulativeTable(ratio, table_lo_, table_hi_, splits,
                           opts_.table_tol, opts_.cells);
  h_base_ = h_cum_(opts_.base_point);
  const double l1 = integrate([&](double x) { return std::abs(ratio(x)); },
                              table_lo_, table_hi_, splits);
  c_s1_ = std::exp(-2.0 * l1);
  c_s2_ = std::exp(2.0 * l1);
  auto sprime = [this](double x) {
    return std::exp(-2.0 * (h_cum_(x) - h_base_));
  };
  s_cum_ = CumulativeTable(sprime, table_lo_, table_hi_, splits,
                           opts_.table_tol, opts_.cells);
  s_base_ = s_cum_(opts_.base_point);

  // monotone seed grid for the inverse
  const int cells = std::max(64, opts_.cells / 4);
  inv_edges_x_.reserve(cells + 1);
  inv_edges_s_.reserve(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double x = table_lo_ + (table_hi_ - table_lo_) * i / cells;
    inv_edges_x_.push_back(x);
    inv_edges_s_.push_back(s_cum_(x) - s_base_);
  }
}

double ScaleFunction::prime(double x) const {
  if (identity_) return 1.0;
  if (x < table_lo_ || x > table_hi_) {
    extrapolated_->store(true);
    x = std::clamp(x, table_lo_, table_hi_);
  }
  return std::exp(-2.0 * (h_cum_(x) - h_base_));
}

double ScaleFunction::value(double x) const {
  if (identity_) return x - opts_.base_point;
  if (x < table_lo_) {
    extrapolated_->store(true);
    return (s_cum_(table_lo_) - s_base_) + prime(table_lo_) * (x - table_lo_);
  }
  if (x > table_hi_) {
    extrapolated_->store(true);
    return (s_cum_(table_hi_) - s_base_) + prime(table_hi_) * (x - table_hi_);
  }
  return s_cum_(x) - s_base_;
}

Interval ScaleFunction::image() const {
  Interval img;
  img.lo = std::isfinite(domain_.lo) ? value(domain_.lo) : -kInf;
  img.hi = std::isfinite(domain_.hi) ? value(domain_.hi) : kInf;
  return img;
}

double ScaleFunction::inverse(double y) const {
  const Interval img = image();
  if (y < img.lo || y > img.hi)
    throw DomainError("scale inverse: value outside the transformed domain");
  if (identity_) return y + opts_.base_point;
  const double s_lo = s_cum_(table_lo_) - s_base_;
  const double s_hi = s_cum_(table_hi_) - s_base_;
  if (y <= s_lo) return table_lo_ + (y - s_lo) / prime(table_lo_);
  if (y >= s_hi) return table_hi_ + (y - s_hi) / prime(table_hi_);

  auto it = std::lower_bound(inv_edges_s_.begin(), inv_edges_s_.end(), y);
  std::size_t hi_idx = static_cast<std::size_t>(it - inv_edges_s_.begin());
  hi_idx = std::min(std::max<std::size_t>(hi_idx, 1),
                    inv_edges_s_.size() - 1);
  double lo = inv_edges_x_[hi_idx - 1], hi = inv_edges_x_[hi_idx];
  // safeguarded Newton on s(x) - y with bisection fallback
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = (s_cum_(x) - s_base_) - y;
    if (f > 0)
      hi = x;
    else
      lo = x;
    const double step = f / prime(x);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-13 * std::max(1.0, std::abs(next)) ||
        hi - lo <= 1e-13 * std::max(1.0, std::abs(x)))
      return next;
    x = next;
  }
  return x;
}

double ScaleFunction::transformed_sigma(double y) const {
  if (identity_) {
    const Interval img = image();
    if (y < img.lo || y > img.hi)
      throw DomainError("transformed diffusion: value outside the domain");
    return sigma_.eval(y + opts_.base_point);
  }
  const double x = inverse(y);
  return sigma_.eval(x) * prime(x);
}

LemmaReport verify_invariance(const ScaleFunction& sf,
                              std::span<const double> grid) {
  if (grid.size() < 2)
    throw InvalidInput("verify_invariance: grid needs >= 2 points");
  std::vector<double> xs(grid.begin(), grid.end());
  std::sort(xs.begin(), xs.end());
  const std::size_t g = xs.size();

  std::vector<double> sp(g), sbar(g), ybar(g), fdom(g);
  double sup_ratio = 0.0;  // sup |b| / sigma^2 over the grid
  double sup_sigma = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    sp[i] = sf.prime(xs[i]);
    const double sig = sf.sigma().eval(xs[i]);
    sbar[i] = sig * sp[i];
    ybar[i] = sf.value(xs[i]);
    fdom[i] = sf.sigma().dominator_f ? sf.sigma().dominator_f(xs[i]) : 0.0;
    sup_sigma = std::max(sup_sigma, std::abs(sig));
    if (sf.drift())
      sup_ratio = std::max(
          sup_ratio, std::abs(sf.drift()->eval(xs[i])) / (sig * sig));
  }

  LemmaReport rep;
  rep.epsilon_bar_bound = sf.epsilon_bar();
  rep.epsilon_bar_floor = kInf;
  for (double v : sbar) rep.epsilon_bar_floor = std::min(rep.epsilon_bar_floor, v);
  rep.ellipticity_ok = rep.epsilon_bar_floor >= rep.epsilon_bar_bound - 1e-9;

  rep.sprime_lipschitz_bound = 2.0 * sup_ratio * sf.c_s2();
  for (std::size_t i = 0; i + 1 < g; ++i) {
    const double dx = xs[i + 1] - xs[i];
    if (dx > 0)
      rep.sprime_lipschitz = std::max(
          rep.sprime_lipschitz, std::abs(sp[i + 1] - sp[i]) / dx);
  }
  rep.lipschitz_ok =
      rep.sprime_lipschitz <= rep.sprime_lipschitz_bound * (1.0 + 1e-9) + 1e-12;

  // constructed dominator on the transformed axis:
  // f_b(y) = 2 c_s2^2 f(s^{-1}(y)) + slope * y, evaluated via the grid
  const double diam = ybar.back() - ybar.front();
  const double lip = rep.sprime_lipschitz_bound;
  const double slope = 2.0 * sup_sigma * sup_sigma * lip * lip * diam /
                       (sf.c_s1() * sf.c_s1());
  rep.pairwise_margin = kInf;
  for (std::size_t i = 0; i < g; ++i) {
    const double fb_i = 2.0 * sf.c_s2() * sf.c_s2() * fdom[i] +
                        slope * ybar[i];
    for (std::size_t j = i + 1; j < g; ++j) {
      const double fb_j = 2.0 * sf.c_s2() * sf.c_s2() * fdom[j] +
                          slope * ybar[j];
      const double lhs = (sbar[i] - sbar[j]) * (sbar[i] - sbar[j]);
      rep.pairwise_margin =
          std::min(rep.pairwise_margin, std::abs(fb_i - fb_j) - lhs);
    }
  }
  rep.pairwise_ok = rep.pairwise_margin >= -1e-12;
  rep.pass = rep.ellipticity_ok && rep.lipschitz_ok && rep.pairwise_ok;
  return rep;
}

TransformedDistances transformed_family_distance(
    const CoefficientFamily& family, std::span<const std::int64_t> n_list,
    const ScaleOptions& opts, const QuadratureSpec& quad) {
  if (n_list.size() < 3)
    throw InvalidInput("transformed_family_distance: need >= 3 n values");
  const ScaleFunction sf_limit(family.limit_b, family.limit_sigma,
                               family.domain, opts);
  TransformedDistances out;
  std::vector<RatePoint> pts;
  for (std::int64_t n : n_list) {
    std::optional<Coefficient> bn;
    if (family.member_b) bn = family.member_b(n);
    const Coefficient sn = family.member(n);
    const ScaleFunction sf_n(bn, sn, family.domain, opts);

    const Interval img_l = sf_limit.image(), img_n = sf_n.image();
    Interval common{std::max(img_l.lo, img_n.lo),
                    std::min(img_l.hi, img_n.hi)};
    if (!(common.lo < common.hi))
      throw DomainError(
          "transformed_family_distance: empty common transformed domain");

    std::vector<double> splits;
    auto push_images = [&](const ScaleFunction& sf,
                           const Coefficient& sigma) {
      for (double d : sigma.discontinuity_points) splits.push_back(sf.value(d));
      if (sf.drift())
        for (double d : sf.drift()->discontinuity_points)
          splits.push_back(sf.value(d));
    };
    push_images(sf_limit, family.limit_sigma);
    push_images(sf_n, sn);
    std::sort(splits.begin(), splits.end());
    splits.erase(std::unique(splits.begin(), splits.end()), splits.end());

    auto integrand = [&](double y) {
      return std::abs(sf_limit.transformed_sigma(y) -
                      sf_n.transformed_sigma(y));
    };
    const double d = integrate(integrand, common.lo, common.hi, splits, quad);
    out.values.emplace_back(n, d);
    if (d > 0) pts.push_back({n, d, 0.0});
  }
  if (pts.size() >= 4) {
    out.fit = fit_log_rate(pts, RateModel::POWER);
  } else {
    out.fit.model = RateModel::POWER;
    out.fit.C = 0.0;
    out.fit.q = std::numeric_limits<double>::infinity();
    out.fit.r_squared = 1.0;
  }
  return out;
}

std::vector<std::pair<double, double>> roundtrip_drift_removal(
    const SimSpec& drifted, std::span<const double> h_list,
    std::size_t replicas, std::uint64_t seed, const ExecPolicy& exec,
    const ScaleOptions& opts) {
  if (h_list.empty())
    throw InvalidInput("roundtrip_drift_removal: empty h list");
  if (replicas < 1)
    throw InvalidInput("roundtrip_drift_removal: need >= 1 replica");
  std::vector<double> hs(h_list.begin(), h_list.end());
  std::sort(hs.begin(), hs.end(), std::greater<>());  // coarse to fine
  const double h_min = hs.back();

  // nested steps let one fine stream drive every level
  std::vector<std::size_t> ratio(hs.size());
  bool nested = true;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double r = hs[i] / h_min;
    ratio[i] = static_cast<std::size_t>(std::llround(r));
    nested = nested && ratio[i] >= 1 &&
             std::abs(r - static_cast<double>(ratio[i])) < 1e-9 * r;
  }

  const ScaleFunction sf(drifted.drift, drifted.diffusion, Interval{}, opts);
  SimSpec fine = drifted;
  fine.step_h = h_min;
  const std::size_t fine_steps = fine.steps();
  const double s_x0 = sf.value(drifted.x0);

  std::vector<double> sums(hs.size(), 0.0);
  std::vector<double> sums_store(hs.size() * replicas, 0.0);
  detail::parallel_for(replicas, exec.threads, [&](std::size_t r) {
      const NoisePath fine_noise =
          generate_noise(fine, {seed, static_cast<std::uint32_t>(r), 0});
      for (std::size_t li = 0; li < hs.size(); ++li) {
        const double h = hs[li];
        std::vector<double> inc;
        if (nested) {
          const std::size_t q = ratio[li];
          inc.resize(fine_steps / q);
          for (std::size_t k = 0; k < inc.size(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < q; ++j)
              acc += fine_noise.increments[k * q + j];
            inc[k] = acc;
          }
        } else {
          SimSpec level = drifted;
          level.step_h = h;
          inc = generate_noise(level, {seed, static_cast<std::uint32_t>(r),
                                       0}).increments;
        }
        // scheme (a): drifted Euler walk mapped through s
        // scheme (b): driftless walk with the transformed diffusion
        double xa = drifted.x0;
        double xb = s_x0;
        double sup = std::abs(sf.value(xa) - xb);
        const Coefficient* b =
            drifted.drift ? &*drifted.drift : nullptr;
        for (std::size_t k = 0; k < inc.size(); ++k) {
          const double sa = drifted.diffusion.eval(xa);
          double next_a = xa + sa * inc[k];
          if (b) next_a += b->eval(xa) * h;
          const double next_b = xb + sf.transformed_sigma(xb) * inc[k];
          if (!std::isfinite(next_a) || !std::isfinite(next_b))
            throw SimulationAbort("roundtrip: non-finite state", k);
          xa = next_a;
          xb = next_b;
          sup = std::max(sup, std::abs(sf.value(xa) - xb));
        }
        sums_store[li * replicas + r] = sup;
      }
  });
  for (std::size_t li = 0; li < hs.size(); ++li)
    for (std::size_t r = 0; r < replicas; ++r)
      sums[li] += sums_store[li * replicas + r];

  std::vector<std::pair<double, double>> out;
  for (std::size_t li = 0; li < hs.size(); ++li)
    out.emplace_back(hs[li], sums[li] / static_cast<double>(replicas));
  return out;
}

}  // namespace sdestab
