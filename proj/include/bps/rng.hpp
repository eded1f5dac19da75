#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bps {

// SplitMix64 step; used only to derive seeds for sub-streams.
inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream seed for sub-stream `id` of `base`: feed base through SplitMix64
// `id`+1 times.  Chain k of a run uses derive_seed(run_seed, k); the
// tempering samplers derive further per-slot / exchange streams from the
// chain seed the same way.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id) {
    for (std::uint64_t i = 0; i <= id; ++i) (void)splitmix64(base);
    std::uint64_t s = base;
    return splitmix64(s);
}

// One reproducible uniform stream.  All stochastic decisions in the library
// draw through this wrapper, never through std::*_distribution, so the
// consumption order is fixed for a given seed across platforms.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    // Uniform in the open interval (0,1): safe inside logs.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection-free would bias for huge n; n here is tiny (states,
        // slots, neighbors), so the modulo of a 64-bit draw is fine.
        return eng_() % n;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Box–Muller without caching the second value: one normal costs two
    // uniforms, and the stream position never depends on call parity.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace bps
