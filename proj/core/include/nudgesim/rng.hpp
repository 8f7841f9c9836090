#pragma once

#include <cstdint>

namespace nudgesim {

/// Small deterministic RNG (splitmix64). Used instead of <random> engines so
/// that sequences are reproducible byte-for-byte across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next() % span);
    }

    /// Derive an independent child stream from this stream's seed and a tag.
    /// Forking does not advance the parent.
    Rng fork(uint64_t tag) const {
        Rng h(state_ ^ (0xd1b54a32d192ed03ull * (tag + 1)));
        h.next();
        return h;
    }

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

/// Stream tags for per-subsystem forks of a trial stream.
namespace rng_stream {
constexpr uint64_t kScene = 1;
constexpr uint64_t kRho = 2;
constexpr uint64_t kTwist = 3;
constexpr uint64_t kNoise = 4;
constexpr uint64_t kTrial = 5;
} // namespace rng_stream

} // namespace nudgesim
