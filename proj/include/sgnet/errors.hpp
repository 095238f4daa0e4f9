#pragma once

#include <stdexcept>
#include <string>

namespace sgnet {

// Invalid shapes, specs or network/config combinations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: backward on a non-scalar, bad CLI flags, bad normalizer.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config/annotation text that fails to parse. Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint does not match the network it is loaded into.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgnet
