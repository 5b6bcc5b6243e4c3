#include "sdestab/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

#include "sdestab/errors.hpp"

namespace sdestab {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& x,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMult0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMult1) * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

inline double to_unit_interval(std::uint64_t bits) {
  // 53 significant bits, then an offset of 2^-54: range
  // [2^-54, 1 - 2^-54], never exactly 0 or 1.
  return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> x = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    philox_round(x, k);
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return x;
}

std::array<double, 2> CounterRng::uniform_pair(std::uint64_t index) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>(index >> 32), replica_, stream_};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32)};
  const auto b = Philox4x32::block(ctr, key);
  const std::uint64_t w0 =
      (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  const std::uint64_t w1 =
      (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
  return {to_unit_interval(w0), to_unit_interval(w1)};
}

double CounterRng::normal(std::uint64_t index) const {
  return normal_quantile(uniform_pair(index)[0]);
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw InvalidInput("normal_quantile: u must lie strictly inside (0,1)");
  // Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u)
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace sdestab
