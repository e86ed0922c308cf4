#pragma once

#include <cmath>
#include <cstdint>

namespace mflq {

// One Brownian stream per (seed, agent). Increments are a pure function of
// (seed, agent, component, step): no sequential state, so agent simulations
// can run on any number of threads and still produce identical paths.
struct RngStreamSpec {
    std::uint64_t seed = 0;
    int agent_id = 0;
};

namespace rng {

// splitmix64 finalizer (Stafford mix13).
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix(seed ^ mix(stream_id + 0x632BE59BD9B4E019ULL));
}

inline std::uint64_t stream_key(const RngStreamSpec& s) {
    return stream_key(s.seed, static_cast<std::uint64_t>(s.agent_id));
}

// Uniform in (0, 1]: never 0, so log() below is safe.
inline double uniform_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal for counter `ctr` of the given stream (Box-Muller).
inline double gaussian(std::uint64_t key, std::uint64_t ctr) {
    const std::uint64_t a = mix(key ^ (2 * ctr + 1) * 0xD1342543DE82EF95ULL);
    const std::uint64_t b = mix(key ^ (2 * ctr + 2) * 0xD1342543DE82EF95ULL);
    const double u1 = uniform_open(a);
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Normal draw for (component, step) of an agent stream.
inline double normal_at(std::uint64_t key, int component, std::int64_t step) {
    const std::uint64_t ctr =
        (static_cast<std::uint64_t>(component) << 40) + static_cast<std::uint64_t>(step);
    return gaussian(key, ctr);
}

} // namespace rng
} // namespace mflq
