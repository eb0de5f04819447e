#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gaugerl {

/// splitmix64 finalizer; used to derive independent substream seeds so that
/// parallel and serial schedules draw identical numbers per stream.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(seed ^ 0x6a09e667f3bcc909ULL) ^ mix_seed(stream) ^ mix_seed(index * 0x3c6ef372fe94f82bULL + 1));
}

/// Stream ids for substream_seed; every consumer draws from its own sequence
/// so evaluation order cannot change the numbers anyone sees.
enum StreamId : std::uint64_t {
    kStreamWeights = 1,
    kStreamX0 = 2,
    kStreamDisturbance = 3,
    kStreamExploration = 4,
    kStreamReplay = 5,
};

/// mt19937_64 with pinned output transforms. std::uniform_real_distribution is
/// implementation-defined, so uniform/normal are derived from raw draws here
/// to keep runs bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed)) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box–Muller (one value per call; pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection to remove modulo bias
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gaugerl
