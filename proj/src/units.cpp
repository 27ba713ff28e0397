#include "homsim/units.hpp"

#include "homsim/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>

namespace homsim {

namespace {

using Suffix = std::pair<std::string_view, double>;

double parse_with_suffix(std::string_view text, const Suffix* first, const Suffix* last,
                         const char* what) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text.empty()) throw ValidationError(std::string("empty ") + what);

    double value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{}) throw ValidationError(std::string("malformed ") + what + ": " + std::string(text));
    std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
    while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);
    if (!std::isfinite(value)) throw ValidationError(std::string("non-finite ") + what);
    if (unit.empty()) return value;
    for (auto s = first; s != last; ++s) {
        if (s->first == unit) return value * s->second;
    }
    throw ValidationError(std::string("unknown unit '") + std::string(unit) + "' in " + what);
}

} // namespace

double parse_duration_ps(std::string_view text) {
    static constexpr std::array<Suffix, 5> units{{
        {"ps", 1.0}, {"ns", 1e3}, {"us", 1e6}, {"ms", 1e9}, {"s", 1e12}}};
    return parse_with_suffix(text, units.data(), units.data() + units.size(), "duration");
}

double parse_frequency_hz(std::string_view text) {
    static constexpr std::array<Suffix, 4> units{{
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}};
    return parse_with_suffix(text, units.data(), units.data() + units.size(), "frequency");
}

double detuning_phase(double delta_f_hz, Timestamp t_ps) {
    if (delta_f_hz == 0) return 0;
    // cycles = df * t; split t so the fractional part keeps full precision
    const long double cycles = static_cast<long double>(delta_f_hz) *
                               static_cast<long double>(t_ps) / 1e12L;
    const long double frac = cycles - std::floor(cycles);
    return static_cast<double>(frac * 2.0L * 3.141592653589793238462643383279502884L);
}

} // namespace homsim
