#include "dcap/jsonutil.hpp"

#include <cstdio>
#include <cstdlib>

namespace dcap {

double round9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace dcap
