#pragma once

#include <stdexcept>
#include <string>

namespace radau {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Spectrum of a matrix does not have the one-real-plus-conjugate-pairs shape.
class SpectrumShapeViolation : public Error {
 public:
  using Error::Error;
};

class RootCountMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownProblem : public Error {
 public:
  explicit UnknownProblem(const std::string& name) : Error("unknown problem: " + name) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

}  // namespace radau
