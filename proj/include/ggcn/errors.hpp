#pragma once

#include <stdexcept>
#include <string>

namespace ggcn {

// Shapes of two operands do not conform.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A precondition on arguments (range, emptiness, policy) was violated.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf showed up where a finite number was required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string shape_str(long rows, long cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

}  // namespace detail
}  // namespace ggcn
