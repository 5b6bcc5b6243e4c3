#include "sdestab/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "sdestab/errors.hpp"
#include "sdestab/rng.hpp"

namespace sdestab {

namespace {

void validate_steps(double h, std::size_t steps) {
  if (!(h > 0.0)) throw InvalidInput("noise: step h must be positive");
  if (steps < 1) throw InvalidInput("noise: need at least one step");
}

}  // namespace

NoisePath brownian_increments(double h, std::size_t steps, std::uint64_t seed,
                              std::uint32_t replica_id,
                              std::uint32_t stream_id) {
  validate_steps(h, steps);
  NoisePath path;
  path.driver = Driver::WIENER;
  path.alpha = 0.0;
  path.step_h = h;
  path.key = {seed, replica_id, stream_id};
  path.increments.resize(steps);
  const CounterRng rng(seed, replica_id, stream_id);
  const double scale = std::sqrt(h);
  for (std::size_t k = 0; k < steps; ++k)
    path.increments[k] = scale * rng.normal(k);
  return path;
}

NoisePath stable_increments(double alpha, double h, std::size_t steps,
                            std::uint64_t seed, std::uint32_t replica_id,
                            std::uint32_t stream_id) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw InvalidInput("stable_increments: alpha must lie in (1,2)");
  validate_steps(h, steps);
  NoisePath path;
  path.driver = Driver::STABLE;
  path.alpha = alpha;
  path.step_h = h;
  path.key = {seed, replica_id, stream_id};
  path.increments.resize(steps);
  const CounterRng rng(seed, replica_id, stream_id);
  const double scale = std::pow(h, 1.0 / alpha);
  const double inv_alpha = 1.0 / alpha;
  const double ratio = (1.0 - alpha) / alpha;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto uu = rng.uniform_pair(k);
    const double theta = M_PI * (uu[0] - 0.5);   // uniform on (-pi/2, pi/2)
    const double expo = -std::log(uu[1]);        // unit exponential
    // Chambers-Mallows-Stuck, symmetric case, CF exp(-|u|^alpha)
    const double s = std::sin(alpha * theta) /
                         std::pow(std::cos(theta), inv_alpha) *
                     std::pow(std::cos(theta - alpha * theta) / expo, ratio);
    path.increments[k] = scale * s;
  }
  return path;
}

std::complex<double> empirical_cf(std::span<const double> samples, double u) {
  if (samples.empty()) throw InvalidInput("empirical_cf: no samples");
  std::complex<double> acc(0.0, 0.0);
  for (double x : samples)
    acc += std::complex<double>(std::cos(u * x), std::sin(u * x));
  return acc / static_cast<double>(samples.size());
}

namespace {

constexpr char kMagic[8] = {'S', 'D', 'E', 'S', 'T', 'A', 'B', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void write_noise_dump(std::ostream& os, const NoisePath& path) {
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, path.driver == Driver::STABLE ? 1u : 0u);
  put<float>(os, static_cast<float>(path.alpha));
  put<float>(os, static_cast<float>(path.step_h));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(path.increments.size()));
  put<std::uint64_t>(os, path.key.seed);
  os.write(reinterpret_cast<const char*>(path.increments.data()),
           static_cast<std::streamsize>(path.increments.size() *
                                        sizeof(double)));
  if (!os) throw SetupError("noise dump: write failed");
}

void write_noise_dump(const std::filesystem::path& file,
                      const NoisePath& path) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw SetupError("noise dump: cannot open " + file.string());
  write_noise_dump(os, path);
}

NoisePath read_noise_dump(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw SetupError("noise dump: bad magic");
  NoisePath path;
  const auto tag = get<std::uint32_t>(is);
  path.driver = tag == 1u ? Driver::STABLE : Driver::WIENER;
  path.alpha = get<float>(is);
  path.step_h = get<float>(is);
  const auto steps = get<std::uint32_t>(is);
  path.key.seed = get<std::uint64_t>(is);
  path.increments.resize(steps);
  is.read(reinterpret_cast<char*>(path.increments.data()),
          static_cast<std::streamsize>(steps * sizeof(double)));
  if (!is) throw SetupError("noise dump: truncated payload");
  return path;
}

NoisePath read_noise_dump(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw SetupError("noise dump: cannot open " + file.string());
  return read_noise_dump(is);
}

}  // namespace sdestab
