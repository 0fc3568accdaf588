#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace magkit {

// Deterministic seeded stream. Normal variates go through an explicit
// Box-Muller so sampled bytes do not depend on the standard library's
// distribution internals; per-object streams keep parallel batches
// reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(mix(seed)), seed_material_(seed) {}

    // Derive an independent stream, e.g. one per particle or trajectory.
    Rng fork(std::uint64_t stream_id) const {
        return Rng(seed_material_ ^ mix(stream_id + 0x9e3779b97f4a7c15ull));
    }

    double uniform() {  // in [0,1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

private:
    static std::uint64_t mix(std::uint64_t x) {  // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 eng_;
    std::uint64_t seed_material_;
};

}  // namespace magkit
