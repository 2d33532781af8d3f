#pragma once

#include <cmath>
#include <cstdint>

namespace ejecta {

/// splitmix64 generator. Tiny state, cheap to construct, and the output is
/// a pure integer function of the seed, so streams keyed on (seed, stream,
/// pixel) reproduce bit for bit on any platform and any worker count.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) without modulo bias worth caring about.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  SplitMix64 m(a ^ (b * 0x9e3779b97f4a7c15ULL) ^ (c * 0xc2b2ae3d27d4eb4fULL));
  return m.next();
}

namespace detail {
// Knuth multiplication method; only sound for small lambda. Takes the
// precomputed exp(-lambda) so per-pixel streams with a shared rate skip
// the transcendental.
inline std::uint32_t poisson_small(SplitMix64& rng, double exp_neg_lambda) {
  std::uint32_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform01();
  } while (p > exp_neg_lambda);
  return k - 1;
}
}  // namespace detail

/// Fixed per-rate state for repeated Poisson draws; large lambdas are
/// split into chunks so the Knuth product never underflows. Chunking is
/// fixed, so results stay reproducible.
struct PoissonSampler {
  int chunks16 = 0;           // count of full lambda = 16 chunks
  double exp_neg_chunk = 0.0;  // exp(-16)
  double exp_neg_rest = 1.0;   // exp(-(lambda mod 16))

  explicit PoissonSampler(double lambda) {
    while (lambda > 16.0) {
      ++chunks16;
      lambda -= 16.0;
    }
    if (chunks16 > 0) exp_neg_chunk = std::exp(-16.0);
    exp_neg_rest = std::exp(-lambda);
  }

  std::uint32_t draw(SplitMix64& rng) const {
    std::uint32_t total = 0;
    for (int i = 0; i < chunks16; ++i) total += detail::poisson_small(rng, exp_neg_chunk);
    return total + detail::poisson_small(rng, exp_neg_rest);
  }
};

inline std::uint32_t poisson_draw(SplitMix64& rng, double lambda) {
  return PoissonSampler(lambda).draw(rng);
}

}  // namespace ejecta
