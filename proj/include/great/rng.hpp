#pragma once

#include <cmath>
#include <cstdint>

namespace great {

// Deterministic random stream: splitmix64 under the hood, standard normals
// via Box-Muller. The method is fixed so that a given seed always produces
// the same draw sequence, on any thread and for any --jobs value.
//
// Seed -> stream mapping used across the library:
//   * RandomStream(seed) consumes the raw 64-bit seed.
//   * child_seed(seed, i) derives an independent stream for sample/trial i;
//     per-sample work always happens on child streams, so results do not
//     depend on how samples are distributed over workers.
//   * Inside one sample, draws happen in a documented order (label first,
//     then latent coordinates).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in {0,...,n-1} (Lemire reduction; bias is < 2^-64).
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal, Box-Muller, generated in pairs with the second value
    // cached inside the stream.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for unit-of-work `index` under a run seed.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x51afd7ed558ccd25ULL));
}

}  // namespace great
