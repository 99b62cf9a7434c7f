#pragma once

#include <stdexcept>
#include <string>

namespace granular_biped {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violated a documented precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class UnreachableTargetError : public Error {
 public:
  using Error::Error;
};

/// The contact point left the curved part of the sole.
class ContactBoundaryError : public Error {
 public:
  using Error::Error;
};

/// Foot pitch rate below the rotation threshold; the rolling radius is unbounded.
class NoRotationError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ZeroDistanceError : public Error {
 public:
  using Error::Error;
};

/// A sweep cell failed; the message names the cell.
class SweepError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; line() is 1-based, 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace granular_biped
