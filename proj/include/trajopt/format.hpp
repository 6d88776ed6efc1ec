#pragma once

#include <cstdio>
#include <string>

namespace trajopt {

/// Locale-independent "%.9g" float formatting used by every CSV/JSON writer.
inline std::string format9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace trajopt
