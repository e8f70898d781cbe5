#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ltm {

// Splittable counter-based generator on top of splitmix64. Every stream is
// fully determined by its 64-bit seed, so equal seeds give equal trajectories
// regardless of how many other streams exist.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Derive an independent child stream from a label. Used to decouple
    // data generation, parameter init and shuffling from one root seed.
    Rng split(std::string_view label) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        Rng child(state_ ^ h);
        child.next_u64();
        return child;
    }

    Rng split(uint64_t index) const {
        Rng child(state_ ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
        child.next_u64();
        return child;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Standard normal via Box-Muller, one value per call (no cached spare,
    // keeps split streams independent of call parity).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    uint64_t state() const { return state_; }

  private:
    uint64_t state_;
};

// FNV-1a 64-bit hash over raw bytes. Used for tokens, checksums and
// checkpoint integrity.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), seed);
}

}  // namespace ltm
