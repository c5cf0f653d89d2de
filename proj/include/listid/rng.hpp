#pragma once

#include <cstdint>
#include <limits>

namespace listid {

/// Counter-based generator: the n-th output is a fixed mixing function of
/// (key, n). Streams split off a parent are keyed by a hash of the parent key
/// and the stream id, so results never depend on draw order across streams.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix(key_ + (counter_++) * kGolden); }

  /// Independent child stream; does not advance this generator.
  constexpr Rng split(std::uint64_t stream) const {
    Rng child;
    child.key_ = mix(key_ ^ mix(stream + kGolden));
    return child;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t v = (*this)();
    while (v >= limit) v = (*this)();
    return v % bound;
  }

  bool bit() {
    if (bits_left_ == 0) {
      bit_buf_ = (*this)();
      bits_left_ = 64;
    }
    const bool b = bit_buf_ & 1U;
    bit_buf_ >>= 1;
    --bits_left_;
    return b;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t bit_buf_ = 0;
  unsigned bits_left_ = 0;
};

}  // namespace listid
