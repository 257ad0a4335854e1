#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace raregraph {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observation outside the support of a distribution.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Distribution parameters violate their invariants (e.g. non-PD covariance).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Maximum-likelihood fitting cannot proceed with the given observations.
class FitError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Cross-record inconsistency (dangling references, broken invariants).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Caller passed an out-of-range argument.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Parameters were fitted against a different feature schema.
class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

// Unknown entity id.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace raregraph
