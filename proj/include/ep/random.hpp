#pragma once

#include <cstdint>
#include <random>

namespace ep {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for work item `index`, independent of which worker runs it.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// mt19937_64 with a fixed bit-to-double mapping, so draws do not depend on
// the standard library's distribution implementation.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    // Uniform in (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace ep
