#pragma once

#include <stdexcept>
#include <string>

namespace pcvqa {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or input-validation failure (bad argument, malformed file,
/// inconsistent configuration). The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A statistic that is mathematically undefined for the given data
/// (constant input to a correlation, zero tau-b denominator).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite or exploding loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace pcvqa
