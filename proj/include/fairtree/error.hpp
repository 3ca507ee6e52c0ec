#pragma once

#include <stdexcept>
#include <string>

namespace fairtree {

// Raised for every contract violation the library detects (bad input files,
// invalid parameters, mismatched vector lengths).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairtree
