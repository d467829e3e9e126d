#pragma once
// Counter-based randomness. All stochastic quantities are drawn from streams keyed by
// (scenario seed, stream tag, indices...), never from call order, so results are
// bit-identical under any parallel schedule. Gaussians use an explicit Box-Muller
// transform to avoid relying on the library distribution's unspecified draw sequence.

#include <cstdint>
#include <random>

namespace irsloc {

// Fixed 64-bit mixing step (splitmix64). Good avalanche; used only for key derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ 0x632be59bd9b4e019ULL) ^ splitmix64(b + 0x9e3779b97f4a7c15ULL);
}

template <class... Rest>
inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_key(mix_key(a, b), static_cast<std::uint64_t>(rest)...);
}

// Stream tags: disjoint randomness domains hanging off one scenario seed.
namespace stream {
inline constexpr std::uint64_t kNoise = 0x6e6f697365ULL;        // measurement noise
inline constexpr std::uint64_t kPattern = 0x7061747465726eULL;  // random IRS patterns
inline constexpr std::uint64_t kPosition = 0x706f73ULL;         // Monte Carlo person draws
inline constexpr std::uint64_t kFloor = 0x666c6f6f72ULL;        // noise-floor estimation
}  // namespace stream

// Deterministic engine + N(0,1) pairs for one keyed stream.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key) : eng_(key) {}

  double uniform01() {  // in (0, 1]; never 0 so log() below is safe
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // One Box-Muller pair; exactly two engine draws per call.
  void normal_pair(double& z0, double& z1) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(6.283185307179586476925286766559 * u2);
    z1 = r * std::sin(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace irsloc
