#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace auxref {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class NotOrthogonal : public Error {
 public:
  using Error::Error;
};

// Reflection vector (or auxiliary axis Wx) too close to zero to define H.
class DegenerateReflection : public Error {
 public:
  using Error::Error;
};

// A = I - cW is singular, so the rank-one determinant formula cannot be used.
class SingularA : public Error {
 public:
  using Error::Error;
};

// Newton hit a singular Jacobian; the offending iterate is kept for retries.
class SingularJacobian : public Error {
 public:
  SingularJacobian(const std::string& what, std::vector<double> iterate, int iteration)
      : Error(what), iterate_(std::move(iterate)), iteration_(iteration) {}

  const std::vector<double>& iterate() const { return iterate_; }
  int iteration() const { return iteration_; }

 private:
  std::vector<double> iterate_;
  int iteration_;
};

}  // namespace auxref
