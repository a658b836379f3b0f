#pragma once
// Deterministic splittable random number generator.
//
// Core stream is splitmix64. Every randomized routine in this library takes
// an explicit 64-bit seed, and independent substreams are derived by hashing
// the parent seed with a list of integer tags. Replicate-level work can then
// be scheduled in any order (or across threads) without changing results.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace eevdag {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1. Lemire multiply-shift; the slight
    // bias is far below anything observable at 64 bits.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    bool coin() { return (next_u64() & 1ULL) != 0; }

    // Standard normal via Box-Muller. Consumes two uniforms per pair of
    // variates; the sine branch is cached and returned on the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // First uniform shifted into (0, 1] so the log stays finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1ULL) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Stateless substream derivation: hash the parent seed with the tags.
    static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        std::uint64_t h = seed;
        for (std::uint64_t t : tags) {
            h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            std::uint64_t s = h;
            h = detail::splitmix64(s);
        }
        return h;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace eevdag
