#pragma once

namespace dcap {

// Round through "%.9g" so every serialized number carries at most 9
// significant digits and parses back to the value that was written.
double round9(double v);

}  // namespace dcap
