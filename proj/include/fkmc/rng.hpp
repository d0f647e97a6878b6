#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>

#include "fkmc/util.hpp"

namespace fkmc::rng {

// Philox4x32-10 (Salmon et al., SC 2011). Counter-based: every 128-bit
// block is a pure function of (counter, key), so any variate of any
// stream can be regenerated without touching the others.

struct Philox4x32 {
  std::array<std::uint32_t, 4> counter{};
  std::array<std::uint32_t, 2> key{};
};

namespace detail {

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline constexpr std::uint32_t kW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void round_once(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mul_hilo(kM4x32A, ctr[0], lo0, hi0);
  mul_hilo(kM4x32B, ctr[2], lo1, hi1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += detail::kW32A;
      key[1] += detail::kW32B;
    }
    detail::round_once(ctr, key);
  }
  return ctr;
}

/// Deterministic Gaussian stream. A stream is addressed by
/// (master seed, domain tag, point key, particle index); the n-th normal
/// is a pure function of that address and n, independent of scheduling.
///
/// Each Philox block yields two 53-bit uniforms, turned into a Box-Muller
/// pair; draw n maps to block n/2, lane n%2.
class RandomStream {
 public:
  RandomStream(std::uint64_t key, std::uint64_t particle)
      : key_(key), particle_(particle) {}

  double next_normal() {
    const std::uint64_t block = draw_ >> 1;
    if (block != cached_block_) {
      fill_block(block);
    }
    return cache_[draw_++ & 1];
  }

  /// One uniform in [0,1) per block (used for launch positions; kept on a
  /// separate domain key from normal streams, never mixed in one stream).
  double next_uniform() {
    const auto r = philox4x32_10(make_counter(draw_), split_key());
    ++draw_;
    const std::uint64_t a = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    return static_cast<double>(a >> 11) * 0x1.0p-53;
  }

  std::uint64_t draws() const { return draw_; }

 private:
  std::array<std::uint32_t, 4> make_counter(std::uint64_t block) const {
    return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
            static_cast<std::uint32_t>(particle_), static_cast<std::uint32_t>(particle_ >> 32)};
  }

  std::array<std::uint32_t, 2> split_key() const {
    return {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
  }

  void fill_block(std::uint64_t block) {
    const auto r = philox4x32_10(make_counter(block), split_key());
    const std::uint64_t a = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t b = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    // u1 in (0,1] keeps the log finite; u2 in [0,1).
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
#ifdef __GLIBC__
    double c, s;
    ::sincos(angle, &s, &c);
    cache_[0] = radius * c;
    cache_[1] = radius * s;
#else
    cache_[0] = radius * std::cos(angle);
    cache_[1] = radius * std::sin(angle);
#endif
    cached_block_ = block;
  }

  std::uint64_t key_;
  std::uint64_t particle_;
  std::uint64_t draw_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  double cache_[2] = {0.0, 0.0};
};

// Domain tags keep unrelated uses of the generator on disjoint keys.
inline constexpr std::uint64_t kDomainBackward = 0x626b77642d736465ULL;
inline constexpr std::uint64_t kDomainForwardPath = 0x6677642d70617468ULL;
inline constexpr std::uint64_t kDomainForwardLaunch = 0x6677642d6c636828ULL;
inline constexpr std::uint64_t kDomainWiener = 0x7769656e65722d71ULL;

/// Key for one query point: hashes the coordinate bit patterns, so identical
/// coordinates share streams (duplicate query points reproduce the same
/// estimate) and distinct points get independent ones.
inline std::uint64_t point_key(std::span<const double> x) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (0x100000001b3ULL * x.size());
  for (double v : x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
    h = splitmix64(h);
  }
  return h;
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t domain, std::uint64_t point) {
  return splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ point);
}

}  // namespace fkmc::rng
