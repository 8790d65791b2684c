#pragma once

#include <cstdio>
#include <string>

namespace so3kit {

// shortest round-trippable decimal form used by every text format we emit
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace so3kit
