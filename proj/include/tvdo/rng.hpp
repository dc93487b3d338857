#pragma once

// Counter-based random numbers (Philox 4x32-10). Every draw is a pure function
// of (key, index), so ensembles are reproducible for any execution order or
// thread count: realization r / agent i get their own stream key derived from
// the root seed, and the k-th normal of a stream is normal(k).

#include <array>
#include <cmath>
#include <cstdint>

namespace tvdo::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream key for substream (a, b) of a root seed.
constexpr std::uint64_t derive_stream(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ a) ^ b);
}

class Philox4x32 {
 public:
  explicit Philox4x32(std::uint64_t key)
      : k0_(static_cast<std::uint32_t>(key)), k1_(static_cast<std::uint32_t>(key >> 32)) {}

  // One 10-round block keyed by the 128-bit counter (block, stream).
  std::array<std::uint32_t, 4> block(std::uint64_t ctr, std::uint64_t stream = 0) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = k0_, k1 = k1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * c0;
      const std::uint64_t p1 = 0xCD9E8D57ULL * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    return {c0, c1, c2, c3};
  }

 private:
  std::uint32_t k0_, k1_;
};

// Standard normals by index. Box-Muller over one Philox block per pair;
// uniforms land in (0,1] so the log is always finite.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : gen_(key) {}

  double operator()(std::uint64_t i) const {
    const auto w = gen_.block(i >> 1);
    const std::uint64_t a = (std::uint64_t(w[0]) << 32) | w[1];
    const std::uint64_t b = (std::uint64_t(w[2]) << 32) | w[3];
    const double u1 = (double((a >> 11) + 1)) * 0x1.0p-53;  // (0,1]
    const double u2 = (double(b >> 11)) * 0x1.0p-53;        // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return (i & 1) ? r * std::sin(ang) : r * std::cos(ang);
  }

 private:
  Philox4x32 gen_;
};

// Uniform in [0,1) by index, for property-test generators.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t key) : gen_(key) {}

  double operator()(std::uint64_t i) const {
    const auto w = gen_.block(i >> 1);
    const std::uint64_t bits = (i & 1) ? ((std::uint64_t(w[2]) << 32) | w[3])
                                       : ((std::uint64_t(w[0]) << 32) | w[1]);
    return double(bits >> 11) * 0x1.0p-53;
  }

 private:
  Philox4x32 gen_;
};

}  // namespace tvdo::rng
