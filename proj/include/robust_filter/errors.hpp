#pragma once

#include <stdexcept>
#include <string>

namespace robust_filter {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Thrown by inverse_sqrt and anything whitening through it.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// Spectral norm is above the stopping threshold but no threshold T violates
// the tail bound.
class FilterStuck : public Error {
 public:
  FilterStuck(const std::string& what, double spectral_value)
      : Error(what), spectral_value_(spectral_value) {}
  double spectral_value() const { return spectral_value_; }

 private:
  double spectral_value_;
};

}  // namespace robust_filter
