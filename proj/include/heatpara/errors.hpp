#pragma once

#include <stdexcept>
#include <string>

namespace heatpara {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GeometryMismatch : public Error {
 public:
  GeometryMismatch() : Error("fields live on different geometries") {}
};

// Raised when an operation is only implemented on the torus.
class GeometryLimitation : public Error {
 public:
  using Error::Error;
};

class NonContraction : public Error {
 public:
  explicit NonContraction(double q)
      : Error("fixed-point map is not a contraction, measured q = " + std::to_string(q)), q_(q) {}
  double q() const { return q_; }

 private:
  double q_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ArchiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace heatpara
