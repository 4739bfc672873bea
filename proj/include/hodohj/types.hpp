#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hodohj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the 0-based character position.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error("syntax error at offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifierError : public Error {
 public:
  UnknownIdentifierError(std::size_t offset, const std::string& name)
      : Error("unknown identifier \"" + name + "\" at offset " + std::to_string(offset)),
        name_(name),
        offset_(offset) {}
  const std::string& name() const { return name_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string name_;
  std::size_t offset_;
};

/// Evaluation outside the real domain of a function (log of a non-positive
/// number, a point outside a sampled grid, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation produced inf or nan.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil could not be evaluated.
class StencilError : public Error {
 public:
  StencilError(const std::string& message, Vec x, double t)
      : Error(message), x_(std::move(x)), t_(t) {}
  const Vec& x() const { return x_; }
  double t() const { return t_; }

 private:
  Vec x_;
  double t_;
};

/// Time stepping diverged.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Real-valued function of (x, t).
using SpaceTimeFunction = std::function<double(const Vec& x, double t)>;

/// Real-valued function of a point.
using SampleSource = std::function<double(const Vec& p)>;

}  // namespace hodohj
