#pragma once

#include <stdexcept>
#include <string>

namespace gsplit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// A level list grew beyond the configured memory cap.
class SizingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "sizing"; }
};

/// Too many consecutive empty trials; usually a mis-tuned schedule.
class RetryBudgetExceeded : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "retry_budget"; }
};

/// A kernel produced a non-finite state or left its level's support.
class KernelFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "kernel_failure"; }
};

class InsufficientData : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_data"; }
};

class ScheduleError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "schedule"; }
};

class ParseError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parse"; }
};

/// Operation requires something the model does not provide.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported_model"; }
};

}  // namespace gsplit
