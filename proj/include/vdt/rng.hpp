// Counter-based deterministic RNG.
//
// Every random quantity in the project is derived from a 64-bit key built by
// mixing a user seed with structural indices (iteration, particle, coordinate,
// ...). This keeps results reproducible bit-for-bit regardless of evaluation
// order or worker count, and makes (seed, iteration) a complete description of
// the RNG state for checkpoint resume.
#pragma once

#include <cmath>
#include <cstdint>

namespace vdt {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }
inline uint64_t mix(uint64_t a, uint64_t b, uint64_t c) { return mix(mix(a, b), c); }
inline uint64_t mix(uint64_t a, uint64_t b, uint64_t c, uint64_t d) { return mix(mix(a, b, c), d); }

// Uniform double in [0, 1), 53 random bits.
inline double to_unit(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Uniform double in (0, 1]; safe as a log() argument.
inline double to_unit_open(uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Sequential stream of 64-bit words derived from a key.
class RngStream {
  public:
    explicit RngStream(uint64_t key) : key_(key) {}

    uint64_t next_u64() { return splitmix64(key_ ^ (++ctr_ * 0x9e3779b97f4a7c15ULL)); }
    double next_unit() { return to_unit(next_u64()); }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller, one value per call (spare cached).
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = to_unit_open(next_u64());
        const double u2 = to_unit(next_u64());
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). Modulo bias is irrelevant at n << 2^64.
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

  private:
    uint64_t key_;
    uint64_t ctr_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vdt
