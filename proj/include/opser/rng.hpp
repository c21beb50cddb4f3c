#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "opser/types.hpp"

namespace opser {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded pseudo-random stream. Every (seed, stream_id) pair yields the same
/// sequence on every platform: the generator is mt19937_64 (fully specified
/// by the standard) and all distributions below are hand-specified rather
/// than delegated to implementation-defined std distributions.
///
/// Streams are derived per node and per purpose so that adding a node or a
/// draw site does not perturb any other stream.
class RngStream {
 public:
  enum class Purpose : std::uint32_t {
    Channel = 0,   // shadowing noise and per-packet error draws, per receiver
    Backoff = 1,   // CSMA backoff periods
    Holding = 2,   // DHD tau, contention-window delays, CID jitter
    Traffic = 3,   // application traffic
    Misc = 4,
  };

  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : gen_(detail::splitmix64(seed ^ detail::splitmix64(stream_id + 0x632be59bd9b4e019ull))) {}

  static RngStream for_node(std::uint64_t seed, NodeId node, Purpose p) {
    return RngStream(seed, (static_cast<std::uint64_t>(node) << 8) |
                               static_cast<std::uint64_t>(p));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    // Lemire's multiply-shift rejection method.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t t = (0 - bound) % bound;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_int(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Gaussian via Box-Muller; one variate per call.
  double normal(double mean, double stddev) {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean + stddev * z;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace opser
