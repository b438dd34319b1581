#pragma once

#include <stdexcept>
#include <string>

namespace fqe {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: bad electron counts, missing sectors, symmetry violations.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A request exceeds a configured size cap (dense conversion, oracle, RDM order 4).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed files: FQEW/FQET binaries, FCIDUMP, matrix text files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed operator strings.
class ParseError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// A series expansion hit its term cap before the contribution fell below the threshold.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int terms, double last_contribution)
      : Error(what), terms_(terms), last_contribution_(last_contribution) {}

  int terms() const noexcept { return terms_; }
  double last_contribution() const noexcept { return last_contribution_; }

 private:
  int terms_;
  double last_contribution_;
};

}  // namespace fqe
