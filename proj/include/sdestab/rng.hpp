#pragma once

#include <array>
#include <cstdint>

namespace sdestab {

// Philox4x32-10 counter-based generator. Stateless: every 128-bit output
// block is a pure function of (key, counter), so replicas and threads can
// draw from disjoint counter lanes without sharing state, and a path can be
// re-materialized from (seed, replica, stream) alone.
struct Philox4x32 {
  static std::array<std::uint32_t, 4> block(
      const std::array<std::uint32_t, 4>& counter,
      const std::array<std::uint32_t, 2>& key);
};

// One logical stream of doubles addressed by sample index.
// key    = seed split into two 32-bit words,
// counter = (index lo, index hi, replica id, stream id).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t replica_id,
             std::uint32_t stream_id = 0)
      : seed_(seed), replica_(replica_id), stream_(stream_id) {}

  // Two independent uniforms in the open interval (0,1) per index.
  std::array<double, 2> uniform_pair(std::uint64_t index) const;
  // Standard normal via the inverse CDF of uniform lane 0.
  double normal(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t replica() const { return replica_; }
  std::uint32_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint32_t replica_, stream_;
};

// Inverse standard normal CDF (strictly increasing, finite on (0,1)).
double normal_quantile(double u);

}  // namespace sdestab
