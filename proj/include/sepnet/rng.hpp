#pragma once

#include <cmath>
#include <cstdint>

namespace sepnet {

// Counter-based generator: every output is a pure function of
// (seed, stream, counter), so identical triples give identical values no
// matter how calls interleave. Streams separate independent uses (weight
// init, training functions, training points, test functions).
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream, uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {
    base_ = mix(seed_ + 0x9e3779b97f4a7c15ull * mix(stream_ + 0x6a09e667f3bcc909ull));
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }
  uint64_t counter() const { return counter_; }
  Rng at(uint64_t counter) const { return Rng(seed_, stream_, counter); }

  uint64_t next_u64() { return word(counter_++); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two counter slots.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1], log finite
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static uint64_t mix(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }
  uint64_t word(uint64_t c) const { return mix(base_ + c * 0x9e3779b97f4a7c15ull); }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_;
  uint64_t base_;
};

// Stream ids. Test draws never share a stream with training draws.
namespace streams {
inline constexpr uint64_t kInit = 1;
inline constexpr uint64_t kTrainFunctions = 2;
inline constexpr uint64_t kTrainPoints = 3;
inline constexpr uint64_t kTestFunctions = 4;
}  // namespace streams

}  // namespace sepnet
