#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <vector>

#include "sdestab/errors.hpp"
#include "sdestab/noise.hpp"
#include "sdestab/rng.hpp"

using namespace sdestab;

TEST_CASE("brownian increments are sqrt(h) times the counter stream") {
  const double h = 1.0 / 64.0;
  const auto path = brownian_increments(h, 32, 99, 7, 3);
  CHECK(path.driver == Driver::WIENER);
  CHECK(path.alpha == 0.0);
  CHECK(path.step_h == h);
  CHECK(path.key.seed == 99);
  CHECK(path.key.replica_id == 7);
  CHECK(path.key.stream_id == 3);
  REQUIRE(path.increments.size() == 32);
  const CounterRng rng(99, 7, 3);
  const double scale = std::sqrt(h);
  for (std::size_t k = 0; k < 32; ++k)
    CHECK(path.increments[k] == scale * rng.normal(k));  // bitwise
  // regeneration is bit-identical; other keys give different streams
  const auto again = brownian_increments(h, 32, 99, 7, 3);
  CHECK(again.increments == path.increments);
  CHECK(brownian_increments(h, 32, 99, 8, 3).increments != path.increments);
  CHECK(brownian_increments(h, 32, 99, 7, 4).increments != path.increments);
  CHECK(brownian_increments(h, 32, 100, 7, 3).increments != path.increments);
  CHECK_THROWS_AS(brownian_increments(0.0, 4, 1, 0), InvalidInput);
  CHECK_THROWS_AS(brownian_increments(h, 0, 1, 0), InvalidInput);
}

TEST_CASE("stable increments: validation and h-scaling") {
  CHECK_THROWS_AS(stable_increments(1.0, 0.1, 4, 1, 0), InvalidInput);
  CHECK_THROWS_AS(stable_increments(2.0, 0.1, 4, 1, 0), InvalidInput);
  CHECK_THROWS_AS(stable_increments(1.5, -1.0, 4, 1, 0), InvalidInput);
  const double alpha = 1.5;
  const auto unit = stable_increments(alpha, 1.0, 64, 5, 2);
  CHECK(unit.driver == Driver::STABLE);
  CHECK(unit.alpha == alpha);
  const auto scaled = stable_increments(alpha, 8.0, 64, 5, 2);
  const double scale = std::pow(8.0, 1.0 / alpha);
  for (std::size_t k = 0; k < 64; ++k)
    CHECK(scaled.increments[k] == scale * unit.increments[k]);  // bitwise
}

TEST_CASE("empirical_cf: exact small cases and unit-modulus bound") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  const auto one = empirical_cf(zeros, 2.0);
  CHECK(one.real() == 1.0);
  CHECK(one.imag() == 0.0);
  const std::vector<double> pair = {0.0, M_PI};
  const auto cancel = empirical_cf(pair, 1.0);
  CHECK(std::abs(cancel.real()) < 1e-15);
  CHECK(std::abs(cancel.imag()) < 1e-15);
  const std::vector<double> skew = {0.5, -1.5, 2.25, 0.0};
  CHECK(std::abs(empirical_cf(skew, 3.7)) <= 1.0 + 1e-15);
  CHECK_THROWS_AS(empirical_cf(std::vector<double>{}, 1.0), InvalidInput);
}

TEST_CASE("empirical_cf matches the target laws statistically") {
  const std::size_t n = 40000;
  const auto gauss = brownian_increments(1.0, n, 123, 0);
  // E exp(iuW) = exp(-u^2/2); sampling error ~ 1/sqrt(n)
  CHECK(std::abs(empirical_cf(gauss.increments, 1.0) -
                 std::complex<double>(std::exp(-0.5), 0.0)) < 4.0 / std::sqrt(n));
  const auto stab = stable_increments(1.8, 1.0, n, 123, 0);
  CHECK(std::abs(empirical_cf(stab.increments, 1.0) -
                 std::complex<double>(std::exp(-1.0), 0.0)) < 4.0 / std::sqrt(n));
  CHECK(std::abs(empirical_cf(stab.increments, 2.0) -
                 std::complex<double>(std::exp(-std::pow(2.0, 1.8)), 0.0)) <
        4.0 / std::sqrt(n));
}

TEST_CASE("noise dump: header layout and bit-exact roundtrip") {
  const double h = 1.0 / 1024.0;  // exact in f32
  const auto path = stable_increments(1.5, h, 17, 4242, 9, 1);
  std::ostringstream os(std::ios::binary);
  write_noise_dump(os, path);
  const std::string bytes = os.str();
  CHECK(bytes.size() == 32 + 17 * sizeof(double));
  CHECK(std::memcmp(bytes.data(), "SDESTAB1", 8) == 0);

  std::istringstream is(bytes, std::ios::binary);
  const auto back = read_noise_dump(is);
  CHECK(back.driver == Driver::STABLE);
  CHECK(back.alpha == 1.5);   // exactly representable in the f32 header
  CHECK(back.step_h == h);
  CHECK(back.key.seed == 4242);
  REQUIRE(back.increments.size() == 17);
  CHECK(std::memcmp(back.increments.data(), path.increments.data(),
                    17 * sizeof(double)) == 0);
}

TEST_CASE("noise dump: file roundtrip and malformed input") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "sdestab_noise_dump_test";
  fs::create_directories(dir);
  const fs::path file = dir / "noise.bin";
  const auto path = brownian_increments(0.25, 8, 7, 0);
  write_noise_dump(file, path);
  const auto back = read_noise_dump(file);
  CHECK(back.driver == Driver::WIENER);
  CHECK(back.increments == path.increments);

  std::istringstream bad("XXESTAB1 not a dump", std::ios::binary);
  CHECK_THROWS_AS(read_noise_dump(bad), SetupError);

  std::ostringstream os(std::ios::binary);
  write_noise_dump(os, path);
  const std::string whole = os.str();
  std::istringstream cut(whole.substr(0, whole.size() - 11),
                         std::ios::binary);
  CHECK_THROWS_AS(read_noise_dump(cut), SetupError);
  CHECK_THROWS_AS(read_noise_dump(dir / "missing.bin"), SetupError);
  fs::remove_all(dir);
}
