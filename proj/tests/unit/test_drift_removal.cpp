#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdestab/coefficients.hpp"
#include "sdestab/drift_removal.hpp"
#include "sdestab/errors.hpp"

using namespace sdestab;

namespace {

Coefficient unit_sigma() {
  Coefficient c;
  c.eval = [](double) { return 1.0; };
  c.epsilon = 1.0;
  c.dominator_f = [](double x) { return x; };
  c.sup_bound = 1.0;
  return c;
}

// s'(x) = exp(-2 beta clamp(x,0,1)) for b = beta 1_{[0,1)}, sigma = 1
double closed_prime(double beta, double x) {
  return std::exp(-2.0 * beta * std::clamp(x, 0.0, 1.0));
}

double closed_value(double beta, double x) {
  if (x <= 0.0) return x;
  if (x <= 1.0) return (1.0 - std::exp(-2.0 * beta * x)) / (2.0 * beta);
  return closed_value(beta, 1.0) + std::exp(-2.0 * beta) * (x - 1.0);
}

}  // namespace

TEST_CASE("no drift short-circuits to the exact identity") {
  const ScaleFunction sf(std::nullopt, unit_sigma());
  CHECK(sf.is_identity());
  CHECK(sf.prime(0.37) == 1.0);
  CHECK(sf.value(0.37) == 0.37);   // bit-exact
  CHECK(sf.inverse(-1.25) == -1.25);
  CHECK(sf.transformed_sigma(2.0) == 1.0);
  CHECK(sf.c_s1() == 1.0);
  CHECK(sf.c_s2() == 1.0);
  CHECK_FALSE(sf.extrapolation_used());

  // an explicit all-zero drift coefficient is detected as well
  Coefficient zero;
  zero.eval = [](double) { return 0.0; };
  zero.sup_bound = 0.0;
  const ScaleFunction sf0(zero, unit_sigma());
  CHECK(sf0.is_identity());
  CHECK(sf0.value(-0.125) == -0.125);

  ScaleOptions shifted;
  shifted.base_point = 1.5;
  const ScaleFunction sfb(std::nullopt, unit_sigma(), {}, shifted);
  CHECK(sfb.value(2.0) == 0.5);
  CHECK(sfb.inverse(0.5) == 2.0);
}

TEST_CASE("step drift against unit diffusion matches the closed form") {
  const double beta = 0.7;
  const ScaleFunction sf(step_coefficient(beta, 0.0, 1.0), unit_sigma());
  CHECK_FALSE(sf.is_identity());
  CHECK(sf.c_s1() == doctest::Approx(std::exp(-1.4)).epsilon(1e-9));
  CHECK(sf.c_s2() == doctest::Approx(std::exp(1.4)).epsilon(1e-9));
  CHECK(sf.epsilon_bar() == doctest::Approx(std::exp(-1.4)).epsilon(1e-9));
  for (double x : {-3.0, -1.0, -0.25, 0.0, 0.2, 0.5, 0.9, 1.0, 1.5, 4.0}) {
    CHECK(sf.prime(x) ==
          doctest::Approx(closed_prime(beta, x)).epsilon(1e-9));
    CHECK(sf.value(x) ==
          doctest::Approx(closed_value(beta, x)).epsilon(1e-9).scale(1.0));
    const double y = sf.value(x);
    CHECK(sf.transformed_sigma(y) ==
          doctest::Approx(closed_prime(beta, x)).epsilon(1e-8));
    CHECK(sf.inverse(y) == doctest::Approx(x).epsilon(1e-11).scale(1.0));
  }
  // monotone increasing
  CHECK(sf.value(-1.0) < sf.value(0.0));
  CHECK(sf.value(0.5) < sf.value(1.0));
  CHECK_FALSE(sf.extrapolation_used());
  CHECK(sf.prime(20.0) ==
        doctest::Approx(std::exp(-1.4)).epsilon(1e-9));  // frozen outside
  CHECK(sf.extrapolation_used());
}

TEST_CASE("inverse respects the transformed domain") {
  const ScaleFunction sf(step_coefficient(0.7, 0.0, 1.0), unit_sigma(),
                         Interval{-2.0, 2.0});
  const Interval img = sf.image();
  CHECK(img.lo == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(img.hi == doctest::Approx(0.7847419896976019).epsilon(1e-9));
  CHECK_THROWS_AS(sf.inverse(img.hi + 0.1), DomainError);
  CHECK_THROWS_AS(sf.inverse(img.lo - 0.1), DomainError);
  CHECK_THROWS_AS(sf.transformed_sigma(img.hi + 0.1), DomainError);
  CHECK(sf.inverse(sf.value(1.7)) ==
        doctest::Approx(1.7).epsilon(1e-11));

  const ScaleFunction ident(std::nullopt, unit_sigma(), Interval{-1.0, 1.0});
  CHECK_THROWS_AS(ident.inverse(1.5), DomainError);
  CHECK_THROWS_AS(ident.transformed_sigma(-1.5), DomainError);
}

TEST_CASE("construction rejects unusable coefficients") {
  Coefficient no_eval;
  CHECK_THROWS_AS(ScaleFunction(std::nullopt, no_eval), SetupError);

  Coefficient flat = unit_sigma();
  flat.epsilon = 0.0;
  CHECK_THROWS_AS(ScaleFunction(std::nullopt, flat), SetupError);

  ScaleOptions far_base;
  far_base.base_point = 10.0;  // outside the [-8, 8] table box
  CHECK_THROWS_AS(ScaleFunction(std::nullopt, unit_sigma(), {}, far_base),
                  SetupError);

  CHECK_THROWS_AS(
      ScaleFunction(std::nullopt, unit_sigma(), Interval{9.0, 12.0}),
      SetupError);  // empty table range against the box

  Coefficient unbounded;
  unbounded.eval = [](double x) { return x; };
  CHECK_THROWS_AS(ScaleFunction(unbounded, unit_sigma()), SetupError);

  Coefficient drift_no_eval;
  drift_no_eval.sup_bound = 1.0;
  CHECK_THROWS_AS(ScaleFunction(drift_no_eval, unit_sigma()), SetupError);
}

TEST_CASE("invariance report passes on the drifted mollified jump family") {
  const auto family = with_drift(mollified_jump_family(1.0, 2.0, 0.0),
                                 step_coefficient(0.5, 0.0, 1.0));
  const ScaleFunction sf(family.limit_b, family.limit_sigma, family.domain);
  const auto grid = default_check_grid(family.limit_sigma, family.domain,
                                       256);
  const auto rep = verify_invariance(sf, grid);
  CHECK(rep.ellipticity_ok);
  CHECK(rep.lipschitz_ok);
  CHECK(rep.pairwise_ok);
  CHECK(rep.pass);
  CHECK(rep.epsilon_bar_floor >= rep.epsilon_bar_bound - 1e-9);
  CHECK(rep.sprime_lipschitz <= rep.sprime_lipschitz_bound * (1.0 + 1e-9));
  CHECK_THROWS_AS(verify_invariance(sf, std::vector<double>{0.0}),
                  InvalidInput);
}

TEST_CASE("transformed member distances keep the 1/n law") {
  const auto family = with_drift(mollified_jump_family(1.0, 2.0, 0.0),
                                 step_coefficient(0.5, 0.0, 1.0));
  const std::vector<std::int64_t> n_list = {4, 8, 16, 32};
  const auto dist = transformed_family_distance(family, n_list);
  REQUIRE(dist.values.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(dist.values[i].first == n_list[i]);
    CHECK(dist.values[i].second > 0.0);
    if (i > 0) CHECK(dist.values[i].second < dist.values[i - 1].second);
  }
  CHECK(dist.fit.model == RateModel::POWER);
  CHECK(dist.fit.q > 0.8);
  CHECK(dist.fit.q < 1.2);
  CHECK(dist.fit.r_squared > 0.95);
  CHECK_THROWS_AS(
      transformed_family_distance(family, std::vector<std::int64_t>{4, 8}),
      InvalidInput);
}

TEST_CASE("roundtrip: driftless systems agree exactly, drifted ones decay") {
  SimSpec plain;
  plain.diffusion = mollified_jump_family(1.0, 2.0, 0.0).limit_sigma;
  plain.x0 = 0.25;
  plain.horizon_T = 1.0;
  const std::vector<double> hs = {1.0 / 64, 1.0 / 128};
  const auto zero = roundtrip_drift_removal(plain, hs, 3, 17);
  REQUIRE(zero.size() == 2);
  CHECK(zero[0].first == 1.0 / 64);   // sorted coarse to fine
  CHECK(zero[1].first == 1.0 / 128);
  CHECK(zero[0].second == 0.0);       // identity transform, same walk
  CHECK(zero[1].second == 0.0);

  SimSpec drifted = plain;
  drifted.diffusion = unit_sigma();
  drifted.drift = step_coefficient(0.5, 0.0, 1.0);
  const auto rt = roundtrip_drift_removal(drifted, hs, 4, 17);
  CHECK(rt[0].second > 0.0);
  CHECK(rt[1].second > 0.0);
  CHECK(std::isfinite(rt[0].second));
  const auto rt_again = roundtrip_drift_removal(drifted, hs, 4, 17);
  CHECK(rt == rt_again);  // deterministic, bit for bit

  // non-nested steps fall back to independent streams and still work
  const std::vector<double> odd = {1.0 / 64, 1.0 / 96};
  const auto mixed = roundtrip_drift_removal(drifted, odd, 2, 17);
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0].first == 1.0 / 64);

  CHECK_THROWS_AS(
      roundtrip_drift_removal(drifted, std::vector<double>{}, 2, 17),
      InvalidInput);
  CHECK_THROWS_AS(roundtrip_drift_removal(drifted, hs, 0, 17), InvalidInput);
}
