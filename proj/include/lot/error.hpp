#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lot {

enum class ErrorKind {
  Shape,
  DegenerateKernel,
  Divergence,
  NumericalBreakdown,
  NonConvergence,
  RealityViolation,
  StaleCache,
  CannotCertify,
  Io,
  Format,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Base class of every error thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class DegenerateKernel : public Error {
 public:
  explicit DegenerateKernel(const std::string& what) : Error(ErrorKind::DegenerateKernel, what) {}
};

class NumericalBreakdown : public Error {
 public:
  explicit NumericalBreakdown(const std::string& what)
      : Error(ErrorKind::NumericalBreakdown, what) {}
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_estimate)
      : Error(ErrorKind::NonConvergence, what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

class RealityViolation : public Error {
 public:
  RealityViolation(const std::string& what, double imag_residual)
      : Error(ErrorKind::RealityViolation, what), imag_residual_(imag_residual) {}
  double imag_residual() const noexcept { return imag_residual_; }

 private:
  double imag_residual_;
};

class StaleCache : public Error {
 public:
  explicit StaleCache(const std::string& what) : Error(ErrorKind::StaleCache, what) {}
};

class CannotCertify : public Error {
 public:
  explicit CannotCertify(const std::string& what) : Error(ErrorKind::CannotCertify, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

}  // namespace lot
