#pragma once

#include <stdexcept>
#include <string>

namespace envirollm {

/// Base class for every error raised by the toolkit. Precondition
/// violations use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProcessEnumerationDenied : public Error {
 public:
  using Error::Error;
};

class NonMonotonicSeries : public Error {
 public:
  using Error::Error;
};

/// A value failed the invariants of its domain type.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class EndpointUnreachable : public Error {
 public:
  using Error::Error;
};

class ModelNotFound : public Error {
 public:
  using Error::Error;
};

class InferenceTimeout : public Error {
 public:
  using Error::Error;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class JudgeUnavailable : public Error {
 public:
  using Error::Error;
};

class UnparseableJudgeReply : public Error {
 public:
  using Error::Error;
};

class BindFailure : public Error {
 public:
  using Error::Error;
};

/// Storage failure; carries the path of the database or file involved.
class StorageError : public Error {
 public:
  StorageError(const std::string& message, std::string path)
      : Error(message + " (" + path + ")"), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace envirollm
