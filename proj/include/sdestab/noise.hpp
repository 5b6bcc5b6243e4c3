#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace sdestab {

enum class Driver { WIENER, STABLE };

struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint32_t replica_id = 0;
  std::uint32_t stream_id = 0;
};

// One increment stream: steps * step_h = horizon. Regeneration from the same
// (key, h, steps) is bit-identical by construction (counter-based generator).
struct NoisePath {
  Driver driver = Driver::WIENER;
  double alpha = 0.0;  // stable index, 0 for WIENER
  double step_h = 0.0;
  std::vector<double> increments;
  NoiseKey key;
};

// i.i.d. N(0, h) increments via the inverse Gaussian CDF.
NoisePath brownian_increments(double h, std::size_t steps, std::uint64_t seed,
                              std::uint32_t replica_id,
                              std::uint32_t stream_id = 0);

// i.i.d. h^{1/alpha} * S with S symmetric alpha-stable, characteristic
// function exp(-|u|^alpha); Chambers-Mallows-Stuck transform from one
// uniform and one exponential per increment. alpha in (1,2).
NoisePath stable_increments(double alpha, double h, std::size_t steps,
                            std::uint64_t seed, std::uint32_t replica_id,
                            std::uint32_t stream_id = 0);

// Sample average of exp(i*u*x); |result| <= 1.
std::complex<double> empirical_cf(std::span<const double> samples, double u);

// Binary dump: 32-byte header (magic "SDESTAB1", driver tag u32, alpha f32,
// h f32, steps u32, seed u64, little-endian) then raw f64 increments.
void write_noise_dump(std::ostream& os, const NoisePath& path);
void write_noise_dump(const std::filesystem::path& file,
                      const NoisePath& path);
NoisePath read_noise_dump(std::istream& is);
NoisePath read_noise_dump(const std::filesystem::path& file);

}  // namespace sdestab
