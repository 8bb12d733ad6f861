#pragma once

#include <stdexcept>
#include <string>

namespace rdm {

// Base for all library errors. The CLI maps ConfigError to exit code 2 and
// every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

// Spectrum whose total mass is zero (or otherwise unusable).
class DegenerateSpectrum : public Error {
 public:
  explicit DegenerateSpectrum(const std::string& what) : Error(what) {}
};

// A scalar filter produced a non-finite value; message names the offending
// singular value.
class FilterDomainError : public Error {
 public:
  explicit FilterDomainError(const std::string& what) : Error(what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what) : Error(what) {}
};

// A trajectory produced a non-finite value; message names the step.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace rdm
