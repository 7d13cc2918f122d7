#pragma once

#include <cstdint>

namespace kms {

/// Counter-based pseudo-random stream keyed by (seed, path, step): the same
/// triple always yields the same number, on every platform, so sampling
/// reports are reproducible and paths could be drawn in parallel.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    double uniform(std::uint64_t path, std::uint64_t step) const {
        std::uint64_t h = mix(seed_ + 0x9e3779b97f4a7c15ULL);
        h = mix(h ^ mix(path + 0xbf58476d1ce4e5b9ULL));
        h = mix(h ^ mix(step + 0x94d049bb133111ebULL));
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

/// Small sequential generator for test corpora (seeded, deterministic).
class SeqRng {
public:
    explicit SeqRng(std::uint64_t seed) : state_(seed ^ 0x2545f4914f6cdd1dULL) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

private:
    std::uint64_t state_;
};

}  // namespace kms
