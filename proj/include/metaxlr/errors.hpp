#pragma once

#include <stdexcept>
#include <string>

namespace metaxlr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced by an operation; `op()` names the producer.
class NumericError : public Error {
 public:
  NumericError(std::string op, const std::string& what)
      : Error(op + ": " + what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class RewardError : public Error {
 public:
  using Error::Error;
};

class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Training aborted; carries the step and language that failed.
class TrainingError : public Error {
 public:
  TrainingError(long step, int language, const std::string& what)
      : Error("step " + std::to_string(step) + ", language " + std::to_string(language) + ": " +
              what),
        step_(step),
        language_(language) {}
  long step() const noexcept { return step_; }
  int language() const noexcept { return language_; }

 private:
  long step_;
  int language_;
};

}  // namespace metaxlr
