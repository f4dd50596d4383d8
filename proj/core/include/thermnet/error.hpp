#pragma once

#include <stdexcept>
#include <string>

namespace thermnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad parameter, dimension
/// mismatch, unphysical rate).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The D-coupler flux bias makes the SQUID inductance non-positive.
class InvalidFlux : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A numerical procedure failed: step-size blow-up, trace drift, singular
/// solve, non-converged fit.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermnet
