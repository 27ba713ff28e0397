#pragma once

#include "homsim/units.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homsim::correlator {

struct NormalizedBin {
    double g2 = 0;
    double sigma = 0; ///< NaN when the bin holds no counts
};

/// Linear-binned coincidence histogram over tau = t_b - t_a in
/// [tau_min_ps, tau_max_ps), half-open bins of width bin_width_ps.
struct CorrelationHistogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t tau_min_ps = 0;
    std::int64_t tau_max_ps = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_a = 0;
    std::uint64_t n_b = 0;
    double duration_ps = 0;
    std::optional<std::vector<NormalizedBin>> normalized;

    static CorrelationHistogram empty(std::int64_t bin_width_ps, std::int64_t tau_max_ps);

    std::size_t n_bins() const { return counts.size(); }
    std::int64_t bin_lo(std::size_t k) const { return tau_min_ps + static_cast<std::int64_t>(k) * bin_width_ps; }
    double bin_center(std::size_t k) const {
        return static_cast<double>(bin_lo(k)) + 0.5 * static_cast<double>(bin_width_ps);
    }
    std::uint64_t total_counts() const;
    bool same_binning(const CorrelationHistogram& other) const;
    /// Index of the bin containing tau, if inside the range.
    std::optional<std::size_t> bin_of(std::int64_t tau_ps) const;
};

/// Full-pair cross-correlation by a sorted-merge sweep. `duration_ps` defaults
/// to the span covered by both streams.
CorrelationHistogram cross_correlate(std::span<const Timestamp> a, std::span<const Timestamp> b,
                                     std::int64_t bin_width_ps, std::int64_t tau_max_ps,
                                     std::optional<double> duration_ps = std::nullopt);

/// Autocorrelation of one stream, excluding each event paired with itself.
CorrelationHistogram auto_correlate(std::span<const Timestamp> stream, std::int64_t bin_width_ps,
                                    std::int64_t tau_max_ps, std::optional<double> duration_ps = std::nullopt);

/// Cross-correlation computed per time chunk of `chunk_ps` over [0, duration)
/// plus a pass over pairs straddling chunk borders; chunk histograms are
/// combined with merge(). Equals cross_correlate() with the same duration.
CorrelationHistogram cross_correlate_chunked(std::span<const Timestamp> a, std::span<const Timestamp> b,
                                             std::int64_t bin_width_ps, std::int64_t tau_max_ps,
                                             Timestamp chunk_ps, double duration_ps);

/// g2 = counts T^2 / (n_a n_b dt (T - |tau|)) with Poisson errors g2 / sqrt(counts).
CorrelationHistogram normalize(CorrelationHistogram hist);

/// Sum of two histograms with identical binning (counts, n_a, n_b, duration).
CorrelationHistogram merge(const CorrelationHistogram& h1, const CorrelationHistogram& h2);

/// Incremental correlator: streams may be fed in chunks of any size as long
/// as each stream stays sorted across calls. finish() returns the same
/// histogram as the batch functions.
class StreamingCorrelator {
  public:
    enum class Mode { cross, autocorrelation };

    StreamingCorrelator(std::int64_t bin_width_ps, std::int64_t tau_max_ps, Mode mode = Mode::cross);

    void push_a(std::span<const Timestamp> chunk);
    void push_b(std::span<const Timestamp> chunk);
    /// Autocorrelation mode input.
    void push(std::span<const Timestamp> chunk);

    CorrelationHistogram finish(std::optional<double> duration_ps = std::nullopt);

  private:
    struct Event {
        Timestamp t;
        std::uint64_t index;
    };

    void append(std::deque<Event>& dst, std::span<const Timestamp> chunk, std::optional<Timestamp>& last,
                std::uint64_t& count, const char* what);
    void drain(bool closed);

    CorrelationHistogram hist_;
    Mode mode_;
    std::deque<Event> pending_a_;
    std::deque<Event> window_b_;
    std::optional<Timestamp> last_a_, last_b_;
    std::optional<Timestamp> first_a_, first_b_;
    bool finished_ = false;
};

/// CSV with header `tau_ps,counts,g2,sigma`, one row per bin at its center.
std::string to_csv(const CorrelationHistogram& hist);
void write_csv(const std::string& path, const CorrelationHistogram& hist);
/// Parse a histogram CSV; binning is recovered from the tau column. Stream
/// sizes and duration are not stored in the file and come back as zero.
CorrelationHistogram read_csv(const std::string& path);
CorrelationHistogram parse_csv(const std::string& text);

} // namespace homsim::correlator
