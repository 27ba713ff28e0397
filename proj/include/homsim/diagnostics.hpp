#pragma once

#include <functional>
#include <string_view>

namespace homsim {

using WarningHandler = std::function<void(std::string_view)>;

/// Replace the process-wide warning sink (default: stderr). Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

} // namespace homsim
