// Deterministic pseudo-random sub-streams.
//
// Every random draw in persim comes from a SplitMix64 stream whose state is
// derived from (seed, tag string, counter). Outcome sampling uses the tuple
// (global seed, agent id, event id); scenario-level choices use
// (choice stream id, trial index). Derivation is stateless, so copies of a
// simulation stay consistent and trials can run on any number of threads
// without changing the numbers.

#pragma once

#include <cstdint>
#include <string_view>

namespace persim {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, used only to fold identifier strings into stream states.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class SubStream {
public:
    SubStream(std::uint64_t seed, std::string_view tag, std::uint64_t counter) {
        state_ = seed;
        splitmix64_next(state_);
        state_ ^= fnv1a(tag);
        splitmix64_next(state_);
        state_ ^= counter;
        splitmix64_next(state_);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform double in [0, 1) with 53 significant bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t state_;
};

} // namespace persim
