#pragma once

#include <stdexcept>
#include <string>

namespace nic {

// Invalid shapes, arguments or configuration values.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or incompatible files: images, checkpoints, bitstreams.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Version mismatch between a file and what this build understands.
class VersionError : public FormatError {
 public:
  VersionError(const std::string& what, int found, int expected)
      : FormatError(what + " (found version " + std::to_string(found) +
                    ", expected " + std::to_string(expected) + ")"),
        found_(found),
        expected_(expected) {}
  int found() const { return found_; }
  int expected() const { return expected_; }

 private:
  int found_;
  int expected_;
};

// Bad user configuration (config files, flags). Carries the offending line
// when it came from a config file.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::invalid_argument(line > 0 ? "line " + std::to_string(line) +
                                             ": " + what
                                       : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nic
