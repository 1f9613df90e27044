#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meattack {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated precondition on an argument (non-positive radius, odd sample count, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class BadDtypeError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Failure talking to a model. queries_consumed is filled in by whoever knows
// the running total (the oracle for a single call, the attack loop for a run).
class OracleError : public Error {
 public:
  OracleError(const std::string& what, std::size_t queries_consumed = 0)
      : Error(what), queries_consumed_(queries_consumed) {}

  std::size_t queries_consumed() const noexcept { return queries_consumed_; }
  void set_queries_consumed(std::size_t n) noexcept { queries_consumed_ = n; }

 private:
  std::size_t queries_consumed_;
};

class TransportError : public OracleError {
 public:
  using OracleError::OracleError;
};

class ProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

// The clean video is not classified as the given label.
class AlreadyMisclassified : public Error {
 public:
  AlreadyMisclassified(std::size_t predicted, std::size_t queries_consumed)
      : Error("already misclassified (predicted " + std::to_string(predicted) + ")"),
        predicted_(predicted),
        queries_consumed_(queries_consumed) {}

  std::size_t predicted() const noexcept { return predicted_; }
  std::size_t queries_consumed() const noexcept { return queries_consumed_; }

 private:
  std::size_t predicted_;
  std::size_t queries_consumed_;
};

}  // namespace meattack
