#pragma once

#include <stdexcept>
#include <string>

namespace ismnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix/vector shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A function was evaluated outside its domain (non-finite result).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or artifact file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data matrices are not rich enough (rank deficient).
class RankError : public Error {
 public:
  using Error::Error;
};

/// A convex program has no solution. `family()` names the constraint group
/// that could not be satisfied.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string family, const std::string& what)
      : Error(what), family_(std::move(family)) {}
  const std::string& family() const { return family_; }

 private:
  std::string family_;
};

/// The numerical solver stalled or produced unusable iterates.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Simulated states left the representable range.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An artifact's recorded input hashes disagree with the files on disk.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ismnet
