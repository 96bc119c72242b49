#pragma once

#include <stdexcept>
#include <string>

namespace mvmocap {

// Malformed or inconsistent user input. The CLI maps this to exit code 1;
// every other exception maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BehindCameraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mvmocap
