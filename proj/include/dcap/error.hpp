#pragma once

#include <stdexcept>
#include <string>

namespace dcap {

// Malformed or inconsistent input data (files, records, schemas). The CLI
// maps this to exit code 2; internal invariant failures map to 3.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dcap
