#ifndef VARCLUST_FORMAT_HPP
#define VARCLUST_FORMAT_HPP

#include <cstdio>
#include <string>

namespace varclust {

// 17 significant digits: enough for exact double round-trips, and stable
// across runs so serialized outputs diff cleanly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace varclust

#endif  // VARCLUST_FORMAT_HPP
