#pragma once

#include <cstdint>
#include <random>

namespace mhe {

/// Splitmix-style mixing for deriving per-channel seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t channel) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (channel + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic standard-normal stream: Box–Muller over mt19937_64, so the
// draw sequence does not depend on the standard library's distribution
// implementation.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mhe
