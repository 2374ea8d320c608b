#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rclevr {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public GraphError {
 public:
  using GraphError::GraphError;
};

class UnknownParam : public GraphError {
 public:
  using GraphError::GraphError;
};

class CyclicGraph : public GraphError {
 public:
  CyclicGraph(std::vector<std::string> cycle, const std::string& message)
      : GraphError(message), cycle_(std::move(cycle)) {}

  /// Node names along the cycle; the first name is repeated at the end.
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

class MechanismDomainError : public Error {
 public:
  using Error::Error;
};

/// Operator parameter outside its declared domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class SceneSourceError : public Error {
 public:
  using Error::Error;
};

class ProbabilityError : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

}  // namespace rclevr
