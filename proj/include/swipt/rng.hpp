#pragma once

#include <cstdint>
#include <random>

namespace swipt {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Named streams used when one run needs several independent generators.
enum class Stream : std::uint64_t {
  kInit = 1,
  kMessages = 2,
  kNoise = 3,
  kCandidates = 4,
  kSelection = 5,
  kData = 6,
  kEval = 7,
};

// Seedable, splittable generator. Children are derived from the seed, never
// from the parent's draw state, so split(k) is stable no matter how many
// numbers the parent has produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
  }
  Rng split(Stream s) const { return split(static_cast<std::uint64_t>(s)); }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace swipt
