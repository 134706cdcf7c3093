#pragma once

#include <stdexcept>
#include <string>

namespace fpbnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputShapeError : public Error {
 public:
  using Error::Error;
};

class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

class InvalidPriorError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class InsufficientEnsembleError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Raised when an ensemble member's loss becomes non-finite.
class TrainingFailure : public Error {
 public:
  TrainingFailure(int member, int epoch, const std::string& what)
      : Error("member " + std::to_string(member) + " failed at epoch " +
              std::to_string(epoch) + ": " + what),
        member_(member),
        epoch_(epoch) {}

  int member() const { return member_; }
  int epoch() const { return epoch_; }

 private:
  int member_;
  int epoch_;
};

}  // namespace fpbnn
