#pragma once

#include <string>

namespace dgrpo {

// Shortest printf form that round-trips a double (17 significant digits).
std::string format_double(double x);

} // namespace dgrpo
