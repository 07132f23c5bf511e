#pragma once

#include <stdexcept>
#include <string>

namespace greenpot {

// Numerical integration did not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

// A linear solve that must succeed did not (internal invariant broken).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds the declared storage or step budget.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace greenpot
