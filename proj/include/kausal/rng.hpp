#pragma once

#include <cmath>
#include <cstdint>

namespace kausal {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, sample, step, lane), so chunked or multithreaded Monte Carlo
// reproduces the single-threaded stream bit for bit.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t sample, std::uint64_t step, std::uint64_t lane) const {
        std::uint64_t x = seed_;
        x = mix(x ^ (0x9e3779b97f4a7c15ull + sample));
        x = mix(x ^ (0xbf58476d1ce4e5b9ull + step));
        x = mix(x ^ (0x94d049bb133111ebull + lane));
        return mix(x);
    }

    // Uniform on (0, 1), never exactly 0 or 1.
    double uniform(std::uint64_t sample, std::uint64_t step, std::uint64_t lane) const {
        return (static_cast<double>(bits(sample, step, lane) >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal via Box-Muller; one value per (sample, step, lane) key.
    double normal(std::uint64_t sample, std::uint64_t step, std::uint64_t lane) const {
        double u1 = uniform(sample, step, 2 * lane);
        double u2 = uniform(sample, step, 2 * lane + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // +1 or -1 with equal probability.
    double sign(std::uint64_t sample, std::uint64_t step, std::uint64_t lane) const {
        return (bits(sample, step, lane) & 1u) ? 1.0 : -1.0;
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t seed_;
};

}  // namespace kausal
