#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace homsim {

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent random streams addressed by (seed, stream tag, block index).
///
/// Every block of a chunked computation draws from its own engine keyed by
/// the block index, so the concatenated output is the same for any worker
/// count or block scheduling order.
enum class StreamTag : std::uint64_t {
    laser_times = 1,
    laser_phase = 2,
    sp_candidates = 3,
    routing = 4,
    phase_bridge = 5,
    detector = 6,
    dark_counts = 7,
};

inline std::mt19937_64 keyed_engine(std::uint64_t seed, StreamTag tag, std::uint64_t block) {
    return std::mt19937_64(
        mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(tag))) + mix64(block + 0x632be59bd9b4e019ULL)));
}

/// Uniform double in (0, 1), never exactly 0.
inline double uniform_open(std::mt19937_64& eng) {
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Number of workers used by chunked kernels; honours HOMSIM_THREADS.
unsigned worker_count();

/// Run `body(i)` for i in [0, n) across worker_count() threads. Each index is
/// visited exactly once; `body` must only touch state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace homsim
