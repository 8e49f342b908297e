#pragma once

#include <stdexcept>
#include <string>

namespace facepulse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates an operation's preconditions (bad shape, non-finite values, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A file or text artifact that cannot be parsed. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Configuration value outside its valid range, or an unknown key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class RankDeficiency : public Error {
 public:
  RankDeficiency(std::size_t requested, std::size_t achievable)
      : Error("data rank too low for " + std::to_string(requested) +
              " components; achievable k = " + std::to_string(achievable)),
        requested_(requested),
        achievable_(achievable) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t achievable() const noexcept { return achievable_; }

 private:
  std::size_t requested_;
  std::size_t achievable_;
};

/// Stage-level error wrapping another failure with the name of the pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool estimation_failure = false)
      : Error(stage + ": " + what), stage_(std::move(stage)), estimation_failure_(estimation_failure) {}
  const std::string& stage() const noexcept { return stage_; }
  /// True when the wrapped failure was an estimation failure rather than bad input.
  bool estimation_failure() const noexcept { return estimation_failure_; }

 private:
  std::string stage_;
  bool estimation_failure_;
};

/// No usable peaks / components: the estimate cannot be produced for this input.
class EstimationFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace facepulse
