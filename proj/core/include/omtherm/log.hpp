#pragma once

#include <functional>
#include <string>

namespace omtherm {

using WarningHandler = std::function<void(const std::string&)>;

// Installs a process-wide handler for non-fatal diagnostics and returns the
// previous one. The default writes to std::clog.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace omtherm
