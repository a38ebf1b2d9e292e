// Counter-based random number generation. Every draw is a pure function of
// (seed, stream, counter), so parallel evaluation order cannot change results.
#pragma once

#include <cmath>
#include <cstdint>

namespace lmtp {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Mixes an arbitrary-length key down to one 64-bit state.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
  std::uint64_t s = detail::splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  s = detail::splitmix64(s ^ a);
  s = detail::splitmix64(s ^ b);
  s = detail::splitmix64(s ^ c);
  return s;
}

// Uniform in (0,1), open at both ends.
inline double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  const std::uint64_t bits = mix_key(seed, a, b, c);
  return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

inline double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
  const double u1 = counter_uniform(seed, a, b, c);
  const double u2 = counter_uniform(seed ^ 0x5851f42d4c957f2dULL, a, b, c);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline bool counter_bernoulli(double p, std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  return counter_uniform(seed, a, b, c) < p;
}

// Stateful convenience wrapper around the counter scheme; used where a stream
// of draws is more natural than explicit counters (e.g. trajectory sampling).
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return counter_uniform(seed_, stream_, counter_++); }
  double normal() {
    const std::uint64_t c = counter_++;
    return counter_normal(seed_, stream_, c);
  }
  bool bernoulli(double p) { return uniform() < p; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace lmtp
