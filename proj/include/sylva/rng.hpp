#ifndef SYLVA_RNG_HPP
#define SYLVA_RNG_HPP

#include <cstdint>
#include <string_view>
#include <cmath>

namespace sylva {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// SplitMix64 generator. Chosen over std::mt19937_64 so streams are
// bit-reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * span;
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    // Derive an independent substream for a named pipeline stage.
    Rng derive(std::string_view stage, std::uint64_t index = 0) const {
        std::uint64_t h = fnv1a64(stage);
        h ^= index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull;
        return Rng(state_ ^ h);
    }

private:
    std::uint64_t state_;
};

}  // namespace sylva

#endif
