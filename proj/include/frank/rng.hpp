// Deterministic RNG streams for reproducible Monte Carlo.
//
// Every replication draws from its own generator, seeded by mixing a global
// seed with the replication index through splitmix64.  Results are therefore
// independent of how replications are distributed across threads: stream k
// always produces the same variates, and reductions are performed in index
// order by the callers.
#pragma once

#include <cstdint>
#include <random>

namespace frank {

// splitmix64 finalizer (Steele, Lea & Flood 2014).  Used only to whiten the
// (seed, stream) pair into a 64-bit state for seeding std::mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Generator for one logical stream.  Streams with distinct (seed, stream_id)
// pairs are de-correlated by two rounds of splitmix64 mixing.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id)
      : gen_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id ^ 0xa5a5a5a5a5a5a5a5ULL))) {}

  // Uniform on the open interval (0,1): (x >> 11) yields 53 random bits,
  // +0.5 keeps both endpoints strictly excluded.  Resolution 2^-53.
  double u01() {
    const std::uint64_t x = gen_();
    return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n): mask-and-reject, unbiased, and (unlike
  // std::uniform_int_distribution) identical across standard libraries.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const std::uint64_t x = gen_() & mask;
      if (x < n) return x;
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace frank
