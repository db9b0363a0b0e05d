#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace swg {

// SplitMix64 step, used only to derive independent per-run seeds from a
// master seed. Engine draws all come from mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t x = master ^ (0x1234f00ddeadbeefULL + index * 0x9e3779b97f4a7c15ULL);
  splitmix64(x);
  return splitmix64(x);
}

// mt19937_64 plus explicit value transforms. The standard pins down the
// engine's output sequence but not the distributions, so the transforms
// live here to keep identical seeds byte-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1], safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Number of failures before the first success of a Bernoulli(p) chain.
  // Caller clamps the result against the remaining range; may return a
  // value larger than any realistic gate count when p is tiny.
  double geometric(double p) {
    if (p >= 1.0) return 0.0;
    return std::floor(std::log(uniform_pos()) / std::log1p(-p));
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      // Knuth product method.
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = uniform_pos();
      while (prod > limit) {
        ++k;
        prod *= uniform_pos();
      }
      return k;
    }
    // Normal approximation with continuity correction; exact-mode trap
    // fills stay far below this branch for all shipped presets.
    const double v = mean + std::sqrt(mean) * normal() + 0.5;
    return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }

  std::uint64_t binomial(std::uint64_t n, double p) {
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      if (uniform() < p) ++k;
    }
    return k;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace swg
