#pragma once

#include <stdexcept>
#include <string>

namespace moodscreen {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data_integrity = 3,
  degenerate_task = 4,
};

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::data_integrity)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

private:
  ExitCode code_;
};

// Bad or inconsistent configuration.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::config) {}
};

// Malformed input files, contract violations on data.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(what, ExitCode::data_integrity) {}
};

// A value outside its documented domain (score ranges, preconditions).
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what, ExitCode::data_integrity) {}
};

// The requested task cannot proceed (single class, nothing selected, ...).
class DegenerateTaskError : public Error {
public:
  explicit DegenerateTaskError(const std::string& what)
      : Error(what, ExitCode::degenerate_task) {}
};

}  // namespace moodscreen
