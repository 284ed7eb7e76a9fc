#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace edgeform {

/// Stacked point list: one column per point, one row per spatial axis.
using Points = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or indexing inconsistency between inputs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Two algebraically equivalent routes disagreed beyond tolerance.
class ConsistencyFault : public Error {
 public:
  using Error::Error;
};

/// A state update produced a non-finite coordinate.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, int index) : Error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

class EmptyGraphError : public Error {
 public:
  using Error::Error;
};

class InfeasibleIntent : public Error {
 public:
  using Error::Error;
};

class UnsupportedShape : public Error {
 public:
  using Error::Error;
};

/// Malformed upstream text. `offset` is the byte offset of the offending span
/// (or -1 when the failure is not tied to a position).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long offset = -1) : Error(what), offset_(offset) {}
  long offset() const { return offset_; }

 private:
  long offset_;
};

/// The supervisor backend could not produce an answer (network, timeout, replay miss).
class BackendFailure : public Error {
 public:
  using Error::Error;
};

/// The control station could not bind or serve.
class StationError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgeform
