#include "dgrpo/text.hpp"

#include <cmath>
#include <cstdio>

namespace dgrpo {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace dgrpo
