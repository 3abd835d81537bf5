#pragma once

#include <cstdint>
#include <cmath>

namespace mavland {

/// splitmix64 step; used to derive independent substream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d9e49a3b4ca952ull;
  return z ^ (z >> 31);
}

/**
 * Seeded Gaussian/uniform stream (xoshiro-free, self-contained).
 *
 * std::normal_distribution is implementation-defined, so draws are generated
 * with an explicit Box-Muller transform on top of splitmix64 output. Streams
 * with different ids derived from the same master seed are independent, so
 * enabling or disabling one sensor never shifts another sensor's draws.
 */
class RandomStream {
 public:
  RandomStream() : state_(0x853c49e6748fea9bull) {}

  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = master_seed;
    splitmix64(s);
    s ^= 0xd6e8feb86659fd93ull * (stream_id + 1);
    splitmix64(s);
    state_ = s ? s : 0x9e3779b97f4a7c15ull;
  }

  /// Uniform in [0, 1). 53-bit resolution.
  double uniform() {
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace mavland
