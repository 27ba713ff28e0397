#pragma once

#include <cstdint>
#include <string_view>

namespace homsim {

/// Detection and emission timestamps, integer picoseconds.
using Timestamp = std::uint64_t;
/// Signed delays between timestamps, integer picoseconds.
using Delay = std::int64_t;

inline constexpr double kPicosecondsPerSecond = 1e12;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Parse a duration such as "150ns", "2.5us" or "1000" (bare numbers are ps).
/// Throws ValidationError on malformed input or unknown suffix.
double parse_duration_ps(std::string_view text);

/// Parse a frequency such as "50MHz", "1.5GHz" or "0" (bare numbers are Hz).
double parse_frequency_hz(std::string_view text);

/// Phase accumulated by a detuning `delta_f_hz` over `t_ps`, reduced to [0, 2pi).
double detuning_phase(double delta_f_hz, Timestamp t_ps);

} // namespace homsim
