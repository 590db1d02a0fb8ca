#pragma once

#include <stdexcept>
#include <string>

namespace fragchoice {

// Thrown when a computation fails for data-dependent reasons (diverged
// normalization, mass-drift abort, empty fit window). The CLI maps this
// to exit code 1, while std::invalid_argument maps to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fragchoice
