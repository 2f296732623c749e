#pragma once

#include <cstdint>
#include <random>

namespace pdmp {

// One independent random stream per (root_seed, stream_id). Replicas get
// distinct stream ids, so results never depend on worker scheduling.
class SeedStream {
 public:
  SeedStream(std::uint64_t root_seed, std::uint64_t stream_id);

  std::uint64_t root_seed() const noexcept { return root_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe for log().
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double standard_normal();

  // Derived stream for a sub-task; deterministic in (root, id, salt).
  SeedStream split(std::uint64_t salt) const;

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_id_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pdmp
