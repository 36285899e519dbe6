#pragma once

#include <stdexcept>
#include <string>

namespace lrplab {

// Base class for everything thrown on purpose by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches and out-of-range indices.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid argument values (negative counts, alpha out of range, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Unparseable or inconsistent run configuration. CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem trouble: missing files, unwritable outputs. CLI exit code 3.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed data files: bad magic, truncated payload, corrupt checkpoint.
// CLI exit code 4.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace lrplab
