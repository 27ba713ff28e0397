#pragma once

// O(n^2) reference correlator, written without reference to the library's
// sweep. Bins are half-open [lo, lo + width) over [-tau_max, tau_max).

#include <cstdint>
#include <vector>

namespace oracle {

struct BruteHistogram {
    std::vector<std::uint64_t> counts;
    std::vector<double> g2;
};

inline void brute_normalize(BruteHistogram& h, std::int64_t width, std::int64_t tau_max, double n_a, double n_b,
                            double duration) {
    h.g2.resize(h.counts.size());
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double center = -static_cast<double>(tau_max) + (static_cast<double>(k) + 0.5) * static_cast<double>(width);
        const double overlap = duration - (center < 0 ? -center : center);
        const double expected = n_a * n_b * static_cast<double>(width) * overlap / (duration * duration);
        h.g2[k] = static_cast<double>(h.counts[k]) / expected;
    }
}

inline BruteHistogram brute_cross(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                  std::int64_t width, std::int64_t tau_max) {
    BruteHistogram h;
    h.counts.assign(static_cast<std::size_t>(2 * tau_max / width), 0);
    for (auto ta : a) {
        for (auto tb : b) {
            const std::int64_t d = static_cast<std::int64_t>(tb) - static_cast<std::int64_t>(ta);
            if (d < -tau_max || d >= tau_max) continue;
            // floor division toward -inf
            std::int64_t k = (d + tau_max) / width;
            h.counts[static_cast<std::size_t>(k)]++;
        }
    }
    return h;
}

inline BruteHistogram brute_auto(const std::vector<std::uint64_t>& a, std::int64_t width, std::int64_t tau_max) {
    BruteHistogram h;
    h.counts.assign(static_cast<std::size_t>(2 * tau_max / width), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (i == j) continue;
            const std::int64_t d = static_cast<std::int64_t>(a[j]) - static_cast<std::int64_t>(a[i]);
            if (d < -tau_max || d >= tau_max) continue;
            h.counts[static_cast<std::size_t>((d + tau_max) / width)]++;
        }
    }
    return h;
}

} // namespace oracle
