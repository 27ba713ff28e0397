#include "homsim/correlator.hpp"

#include "homsim/errors.hpp"
#include "homsim/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace homsim::correlator {

namespace {

void check_binning(std::int64_t bin_width_ps, std::int64_t tau_max_ps) {
    if (bin_width_ps <= 0) throw ValidationError("bin width must be > 0");
    if (tau_max_ps <= 0) throw ValidationError("correlation window must be > 0");
    if (tau_max_ps % bin_width_ps != 0)
        throw ValidationError("correlation window must be a multiple of the bin width");
}

void check_sorted(std::span<const Timestamp> s, const char* what) {
    if (!std::is_sorted(s.begin(), s.end())) throw ValidationError(std::string(what) + " stream is not sorted");
}

double default_duration(std::span<const Timestamp> a, std::span<const Timestamp> b) {
    std::optional<Timestamp> lo, hi;
    for (auto s : {a, b}) {
        if (s.empty()) continue;
        lo = lo ? std::min(*lo, s.front()) : s.front();
        hi = hi ? std::max(*hi, s.back()) : s.back();
    }
    return lo ? static_cast<double>(*hi - *lo) : 0.0;
}

/// Count pairs (a_i, b_j) with b_j - a_i in [-tau_max, tau_max), for a_i in
/// a[a_lo, a_hi). `skip_same` excludes j == i + index_offset (autocorrelation).
/// `skip_b` excludes b_j for which it returns true.
template <class SkipB>
void sweep(std::span<const Timestamp> a, std::size_t a_lo, std::size_t a_hi, std::span<const Timestamp> b,
           CorrelationHistogram& h, bool skip_same, SkipB&& skip_b) {
    const std::int64_t tau_max = h.tau_max_ps;
    const std::int64_t width = h.bin_width_ps;
    auto* counts = h.counts.data();
    if (a_lo >= a_hi || b.empty()) return;
    const Timestamp first = a[a_lo];
    std::size_t lo = static_cast<std::size_t>(
        std::lower_bound(b.begin(), b.end(), first > static_cast<Timestamp>(tau_max) ? first - tau_max : 0) -
        b.begin());
    for (std::size_t i = a_lo; i < a_hi; ++i) {
        const auto ta = static_cast<std::int64_t>(a[i]);
        while (lo < b.size() && static_cast<std::int64_t>(b[lo]) < ta - tau_max) ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const std::int64_t d = static_cast<std::int64_t>(b[j]) - ta;
            if (d >= tau_max) break;
            if (skip_same && j == i) continue;
            if (skip_b(j)) continue;
            ++counts[(d + tau_max) / width];
        }
    }
}

constexpr auto no_skip = [](std::size_t) { return false; };

} // namespace

CorrelationHistogram CorrelationHistogram::empty(std::int64_t bin_width_ps, std::int64_t tau_max_ps) {
    check_binning(bin_width_ps, tau_max_ps);
    CorrelationHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.tau_min_ps = -tau_max_ps;
    h.tau_max_ps = tau_max_ps;
    h.counts.assign(static_cast<std::size_t>(2 * tau_max_ps / bin_width_ps), 0);
    return h;
}

std::uint64_t CorrelationHistogram::total_counts() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

bool CorrelationHistogram::same_binning(const CorrelationHistogram& o) const {
    return bin_width_ps == o.bin_width_ps && tau_min_ps == o.tau_min_ps && tau_max_ps == o.tau_max_ps &&
           counts.size() == o.counts.size();
}

std::optional<std::size_t> CorrelationHistogram::bin_of(std::int64_t tau_ps) const {
    if (tau_ps < tau_min_ps || tau_ps >= tau_max_ps) return std::nullopt;
    return static_cast<std::size_t>((tau_ps - tau_min_ps) / bin_width_ps);
}

CorrelationHistogram cross_correlate(std::span<const Timestamp> a, std::span<const Timestamp> b,
                                     std::int64_t bin_width_ps, std::int64_t tau_max_ps,
                                     std::optional<double> duration_ps) {
    auto h = CorrelationHistogram::empty(bin_width_ps, tau_max_ps);
    check_sorted(a, "first");
    check_sorted(b, "second");
    sweep(a, 0, a.size(), b, h, false, no_skip);
    h.n_a = a.size();
    h.n_b = b.size();
    h.duration_ps = duration_ps.value_or(default_duration(a, b));
    return h;
}

CorrelationHistogram auto_correlate(std::span<const Timestamp> stream, std::int64_t bin_width_ps,
                                    std::int64_t tau_max_ps, std::optional<double> duration_ps) {
    auto h = CorrelationHistogram::empty(bin_width_ps, tau_max_ps);
    check_sorted(stream, "input");
    sweep(stream, 0, stream.size(), stream, h, true, no_skip);
    h.n_a = h.n_b = stream.size();
    h.duration_ps = duration_ps.value_or(default_duration(stream, {}));
    return h;
}

CorrelationHistogram cross_correlate_chunked(std::span<const Timestamp> a, std::span<const Timestamp> b,
                                             std::int64_t bin_width_ps, std::int64_t tau_max_ps,
                                             Timestamp chunk_ps, double duration_ps) {
    if (chunk_ps == 0) throw ValidationError("chunk length must be > 0");
    if (!(duration_ps > 0)) throw ValidationError("chunked correlation needs a positive duration");
    check_sorted(a, "first");
    check_sorted(b, "second");
    const auto chunk = static_cast<double>(chunk_ps);
    const auto n_chunks = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration_ps / chunk)));
    // chunk k owns [k * chunk, (k + 1) * chunk); the last one also owns everything later
    auto chunk_of = [&](Timestamp t) {
        return std::min<std::size_t>(n_chunks - 1, static_cast<std::size_t>(t / chunk_ps));
    };
    auto bounds = [&](std::span<const Timestamp> s, std::size_t k) {
        auto lo = std::lower_bound(s.begin(), s.end(), static_cast<Timestamp>(k) * chunk_ps) - s.begin();
        auto hi = k + 1 == n_chunks
                      ? static_cast<std::ptrdiff_t>(s.size())
                      : std::lower_bound(s.begin(), s.end(), static_cast<Timestamp>(k + 1) * chunk_ps) - s.begin();
        return std::pair{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
    };

    std::vector<CorrelationHistogram> local(n_chunks);
    std::vector<CorrelationHistogram> border(n_chunks);
    parallel_for(n_chunks, [&](std::size_t k) {
        const auto [alo, ahi] = bounds(a, k);
        const auto [blo, bhi] = bounds(b, k);
        const double span = k + 1 == n_chunks ? duration_ps - static_cast<double>(k) * chunk : chunk;
        local[k] = cross_correlate(a.subspan(alo, ahi - alo), b.subspan(blo, bhi - blo), bin_width_ps,
                                   tau_max_ps, span);
        local[k].n_a = ahi - alo;
        local[k].n_b = bhi - blo;

        // Pairs whose partner lies in another chunk; only a near the borders can have any.
        auto& h = border[k];
        h = CorrelationHistogram::empty(bin_width_ps, tau_max_ps);
        const auto start = static_cast<Timestamp>(k) * chunk_ps;
        const auto stop = start + chunk_ps;
        auto skip_same_chunk = [&](std::size_t j) { return chunk_of(b[j]) == k; };
        std::size_t i = alo;
        for (; i < ahi && a[i] < start + static_cast<Timestamp>(tau_max_ps); ++i) {}
        sweep(a, alo, i, b, h, false, skip_same_chunk);
        std::size_t j = std::max(i, static_cast<std::size_t>(
                                        std::lower_bound(a.begin() + static_cast<std::ptrdiff_t>(alo),
                                                         a.begin() + static_cast<std::ptrdiff_t>(ahi),
                                                         stop > static_cast<Timestamp>(tau_max_ps) ? stop - tau_max_ps : 0) -
                                        a.begin()));
        if (k + 1 < n_chunks) sweep(a, j, ahi, b, h, false, skip_same_chunk);
    });

    auto total = CorrelationHistogram::empty(bin_width_ps, tau_max_ps);
    for (std::size_t k = 0; k < n_chunks; ++k) total = merge(merge(total, local[k]), border[k]);
    return total;
}

CorrelationHistogram normalize(CorrelationHistogram h) {
    if (h.n_a == 0 || h.n_b == 0 || !(h.duration_ps > 0))
        throw DomainError("cannot normalize: empty stream or zero duration");
    const double duration = h.duration_ps;
    if (duration <= static_cast<double>(h.tau_max_ps))
        throw ValidationError("cannot normalize: duration does not exceed the correlation window");
    const double base = duration * duration /
                        (static_cast<double>(h.n_a) * static_cast<double>(h.n_b) * static_cast<double>(h.bin_width_ps));
    std::vector<NormalizedBin> out(h.n_bins());
    for (std::size_t k = 0; k < h.n_bins(); ++k) {
        const double c = static_cast<double>(h.counts[k]);
        const double g2 = c * base / (duration - std::abs(h.bin_center(k)));
        out[k] = {g2, c > 0 ? g2 / std::sqrt(c) : std::numeric_limits<double>::quiet_NaN()};
    }
    h.normalized = std::move(out);
    return h;
}

CorrelationHistogram merge(const CorrelationHistogram& h1, const CorrelationHistogram& h2) {
    if (!h1.same_binning(h2)) throw ValidationError("cannot merge histograms with different binning");
    CorrelationHistogram out = h1;
    out.normalized.reset();
    for (std::size_t k = 0; k < out.counts.size(); ++k) out.counts[k] += h2.counts[k];
    out.n_a += h2.n_a;
    out.n_b += h2.n_b;
    out.duration_ps += h2.duration_ps;
    return out;
}

// ---------------------------------------------------------------------------

StreamingCorrelator::StreamingCorrelator(std::int64_t bin_width_ps, std::int64_t tau_max_ps, Mode mode)
    : hist_(CorrelationHistogram::empty(bin_width_ps, tau_max_ps)), mode_(mode) {}

void StreamingCorrelator::append(std::deque<Event>& dst, std::span<const Timestamp> chunk,
                                 std::optional<Timestamp>& last, std::uint64_t& count, const char* what) {
    for (const Timestamp t : chunk) {
        if (last && t < *last) throw ValidationError(std::string(what) + " stream is not sorted");
        dst.push_back({t, count++});
        last = t;
    }
}

void StreamingCorrelator::push_a(std::span<const Timestamp> chunk) {
    if (mode_ != Mode::cross || finished_) throw ValidationError("push_a requires an open cross correlator");
    if (!chunk.empty() && !first_a_) first_a_ = chunk.front();
    append(pending_a_, chunk, last_a_, hist_.n_a, "first");
    drain(false);
}

void StreamingCorrelator::push_b(std::span<const Timestamp> chunk) {
    if (mode_ != Mode::cross || finished_) throw ValidationError("push_b requires an open cross correlator");
    if (!chunk.empty() && !first_b_) first_b_ = chunk.front();
    append(window_b_, chunk, last_b_, hist_.n_b, "second");
    drain(false);
}

void StreamingCorrelator::push(std::span<const Timestamp> chunk) {
    if (mode_ != Mode::autocorrelation || finished_)
        throw ValidationError("push requires an open autocorrelator");
    if (!chunk.empty() && !first_a_) first_a_ = chunk.front();
    std::uint64_t n = hist_.n_a;
    std::optional<Timestamp> last = last_a_;
    append(pending_a_, chunk, last_a_, hist_.n_a, "input");
    append(window_b_, chunk, last, n, "input");
    last_b_ = last_a_;
    drain(false);
}

void StreamingCorrelator::drain(bool closed) {
    const std::int64_t tau_max = hist_.tau_max_ps;
    const std::int64_t width = hist_.bin_width_ps;
    const bool skip_self = mode_ == Mode::autocorrelation;
    while (!pending_a_.empty()) {
        const Event a = pending_a_.front();
        const auto ta = static_cast<std::int64_t>(a.t);
        if (!closed && !(last_b_ && static_cast<std::int64_t>(*last_b_) >= ta + tau_max)) break;
        while (!window_b_.empty() && static_cast<std::int64_t>(window_b_.front().t) < ta - tau_max)
            window_b_.pop_front();
        for (const Event& b : window_b_) {
            const std::int64_t d = static_cast<std::int64_t>(b.t) - ta;
            if (d >= tau_max) break;
            if (skip_self && b.index == a.index) continue;
            ++hist_.counts[static_cast<std::size_t>((d + tau_max) / width)];
        }
        pending_a_.pop_front();
    }
    if (pending_a_.empty() && last_a_) {
        const auto floor = static_cast<std::int64_t>(*last_a_) - tau_max;
        while (!window_b_.empty() && static_cast<std::int64_t>(window_b_.front().t) < floor) window_b_.pop_front();
    }
}

CorrelationHistogram StreamingCorrelator::finish(std::optional<double> duration_ps) {
    if (finished_) throw ValidationError("correlator already finished");
    drain(true);
    finished_ = true;
    if (mode_ == Mode::autocorrelation) hist_.n_b = hist_.n_a;
    if (duration_ps) {
        hist_.duration_ps = *duration_ps;
    } else {
        std::optional<Timestamp> lo, hi;
        for (auto [f, l] : {std::pair{first_a_, last_a_}, std::pair{first_b_, last_b_}}) {
            if (!f) continue;
            lo = lo ? std::min(*lo, *f) : *f;
            hi = hi ? std::max(*hi, *l) : *l;
        }
        hist_.duration_ps = lo ? static_cast<double>(*hi - *lo) : 0.0;
    }
    return std::move(hist_);
}

// ---------------------------------------------------------------------------

namespace {

void append_number(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

} // namespace

std::string to_csv(const CorrelationHistogram& h) {
    std::string out = "tau_ps,counts,g2,sigma\n";
    out.reserve(out.size() + h.n_bins() * 48);
    for (std::size_t k = 0; k < h.n_bins(); ++k) {
        append_number(out, h.bin_center(k));
        out += ',';
        out += std::to_string(h.counts[k]);
        out += ',';
        if (h.normalized) {
            append_number(out, (*h.normalized)[k].g2);
            out += ',';
            append_number(out, (*h.normalized)[k].sigma);
        } else {
            out += "nan,nan";
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const CorrelationHistogram& hist) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    const auto text = to_csv(hist);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("failed writing " + path);
}

namespace {

double parse_field(std::string_view s, std::size_t line) {
    if (s == "nan" || s == "NaN" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw FormatError("histogram CSV line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

} // namespace

CorrelationHistogram parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("histogram CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "tau_ps,counts,g2,sigma") throw FormatError("histogram CSV has an unexpected header");

    std::vector<double> tau;
    std::vector<std::uint64_t> counts;
    std::vector<NormalizedBin> norm;
    bool has_norm = true;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string_view rest(line);
        double f[4];
        for (int i = 0; i < 4; ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i == 3))
                throw FormatError("histogram CSV line " + std::to_string(lineno) + ": expected 4 fields");
            f[i] = parse_field(rest.substr(0, comma), lineno);
            if (i < 3) rest.remove_prefix(comma + 1);
        }
        if (!(f[1] >= 0) || f[1] != std::floor(f[1]))
            throw FormatError("histogram CSV line " + std::to_string(lineno) + ": counts must be a non-negative integer");
        tau.push_back(f[0]);
        counts.push_back(static_cast<std::uint64_t>(f[1]));
        if (std::isnan(f[2])) has_norm = false;
        norm.push_back({f[2], f[3]});
    }
    if (tau.size() < 2) throw FormatError("histogram CSV needs at least two bins");
    const double width = tau[1] - tau[0];
    if (!(width > 0) || width != std::round(width)) throw FormatError("histogram CSV has irregular tau spacing");
    for (std::size_t k = 1; k < tau.size(); ++k) {
        if (std::abs(tau[k] - tau[k - 1] - width) > 1e-6 * width)
            throw FormatError("histogram CSV has irregular tau spacing");
    }
    CorrelationHistogram h;
    h.bin_width_ps = static_cast<std::int64_t>(width);
    h.tau_min_ps = static_cast<std::int64_t>(std::llround(tau[0] - width / 2));
    h.tau_max_ps = h.tau_min_ps + static_cast<std::int64_t>(tau.size()) * h.bin_width_ps;
    h.counts = std::move(counts);
    if (has_norm) h.normalized = std::move(norm);
    return h;
}

CorrelationHistogram read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_csv(ss.str());
}

} // namespace homsim::correlator
