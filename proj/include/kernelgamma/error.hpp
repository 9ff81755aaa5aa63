#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kernelgamma {

// Base type for everything this library throws on purpose.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: parse failures, dimension mismatches, out-of-domain
// arguments. Maps to process exit code 2 in the CLI.
class data_error : public error {
 public:
  using error::error;
};

// Parse failure that knows the 1-based input line it happened on.
class parse_error : public data_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : data_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Numerical failure on well-formed input. Maps to exit code 3 in the CLI.
class numerical_error : public error {
 public:
  using error::error;
};

// Geometry that admits no finite kernel parameter (zero diameters or
// coincident classes).
class degenerate_geometry_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

// A class whose centered Gram matrix has no eigenvalue above tolerance.
class degenerate_class_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

}  // namespace kernelgamma
