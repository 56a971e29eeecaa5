#pragma once

#include <stdexcept>
#include <string>

namespace pufm {

// Input cloud collapsed to a single point (or similar), so a required
// normalization/scale does not exist.
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed content in a text format. Carries the 1-based line number.
struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

// Structurally unsupported file layout (wrong magic, unsupported encoding, ...).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf showed up where finite values are required.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap without converging.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pufm
