#pragma once

#include <stdexcept>
#include <string>

namespace coxbayes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (e.g. a covariate value outside [0,1]^d).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Gaussian field synthesis could not be carried out exactly on the requested grid.
class SynthesisError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant was violated (negative intensity, inconsistent trees, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. `path` is a JSON pointer to the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace coxbayes
