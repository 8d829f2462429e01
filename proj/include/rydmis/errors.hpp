#pragma once

#include <stdexcept>
#include <string>

namespace rydmis {

// Precondition / input validation failures. CLI maps these to exit code 2.
class spec_error : public std::runtime_error {
 public:
  explicit spec_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failures (eigensolver breakdown, tolerance not
// achievable, non-finite values). CLI maps these to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rydmis
