#pragma once

#include <stdexcept>
#include <string>

namespace sparse_nash {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A ball, search or enumeration grew beyond its configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Two processes live on different scenario spaces.
class SpaceMismatchError : public Error {
 public:
  using Error::Error;
};

class IncompleteProfileError : public Error {
 public:
  using Error::Error;
};

class IncompleteBoundaryError : public Error {
 public:
  using Error::Error;
};

/// rho = ell_U / gamma_U is not below one; no solve is attempted.
class ContractionViolationError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unresolvable configuration. The message carries the field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An experiment was requested under inputs that break its hypotheses
/// (for instance dependent heterogeneity in a covariance experiment).
class HypothesisViolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparse_nash
