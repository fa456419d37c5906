#pragma once

#include <stdexcept>
#include <string>

namespace bimanual {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// action-codec
class OutOfWorkspace : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// perception
class EmptyObject : public Error {
 public:
  using Error::Error;
};

// demo-store
class EmptyEpisode : public Error {
 public:
  using Error::Error;
};

class InsufficientDemos : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

// prompt-codec. All three derive from CompletionError so callers can decide
// whether to retry without caring about the exact kind.
class CompletionError : public Error {
 public:
  using Error::Error;
};

class ParseFailure : public CompletionError {
 public:
  using CompletionError::CompletionError;
};

class ArityMismatch : public CompletionError {
 public:
  using CompletionError::CompletionError;
};

class RangeViolation : public CompletionError {
 public:
  using CompletionError::CompletionError;
};

// strategies
class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

class AllCandidatesFailed : public Error {
 public:
  using Error::Error;
};

// judge
class JudgeParseError : public Error {
 public:
  using Error::Error;
};

// eval-cli
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bimanual
