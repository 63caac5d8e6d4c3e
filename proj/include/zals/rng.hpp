#pragma once

#include <cstdint>
#include <random>

namespace zals {

// Finalizer from splitmix64; good avalanche, used to mix stream indices
// into seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Explicit random state. Every sampling routine in the library takes one of
// these by reference; there is no hidden global generator. Uniform draws are
// built from the top 53 bits of the engine output so the stream is identical
// across platforms and standard-library versions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Uniform on the open interval (0,1); never returns exactly 0 or 1.
    double uniform() {
        const std::uint64_t bits = engine_();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t next_u64() { return engine_(); }

    // Independent substream for (seed, a, b, c). Replicate-level parallelism
    // derives one stream per work item so results do not depend on scheduling.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c) {
        std::uint64_t s = mix64(seed);
        s = mix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
        s = mix64(s ^ (b + 0xbf58476d1ce4e5b9ULL));
        s = mix64(s ^ (c + 0x94d049bb133111ebULL));
        return Rng(s);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace zals
