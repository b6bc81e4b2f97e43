#pragma once

#include <cstdint>
#include <random>

namespace maxscore {

/// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a parent seed and a branch index.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Seeded random stream with splittable substreams.
///
/// Streams derived through child() depend only on the root seed and the index
/// path, never on how much the parent has been consumed, so work items that own
/// their index-derived stream produce identical draws regardless of scheduling.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent substream for branch `index`; does not consume this stream.
    RandomStream child(std::uint64_t index) const {
        return RandomStream(derive_seed(seed_, index));
    }

    RandomStream child(std::uint64_t a, std::uint64_t b) const {
        return RandomStream(derive_seed(derive_seed(seed_, a), b));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() { return normal_(engine_); }

    double student_t3() { return t3_(engine_); }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{};
    std::student_t_distribution<double> t3_{3.0};
};

}  // namespace maxscore
