#pragma once

#include <stdexcept>
#include <string>

namespace dynsync {

// bad inputs: shapes, ranges, malformed files, inconsistent flags
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// solver breakdowns: nonconvergence, failed certificates
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dynsync
