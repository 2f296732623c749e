#include "pdmp/rng.hpp"

#include <cmath>

namespace pdmp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t root, std::uint64_t id) {
  const std::uint64_t a = splitmix64(root);
  const std::uint64_t b = splitmix64(a ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeedStream::SeedStream(std::uint64_t root_seed, std::uint64_t stream_id)
    : root_seed_(root_seed), stream_id_(stream_id), engine_(seeded_engine(root_seed, stream_id)) {}

double SeedStream::standard_normal() {
  // Marsaglia polar method; consumes a variable number of uniforms.
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

SeedStream SeedStream::split(std::uint64_t salt) const {
  return SeedStream(splitmix64(root_seed_ ^ splitmix64(salt + 0x51ed27b3ULL)),
                    splitmix64(stream_id_ + salt));
}

}  // namespace pdmp
