#pragma once

#include <stdexcept>
#include <string>

namespace pkdyn {

// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct AllZeroError : Error {
  explicit AllZeroError(const std::string& msg = "all coordinates are zero or non-finite") : Error(msg) {}
};

struct DimMismatchError : Error {
  explicit DimMismatchError(const std::string& msg = "projective dimensions do not match") : Error(msg) {}
};

struct DegenerateMapError : Error {
  explicit DegenerateMapError(const std::string& msg) : Error(msg) {}
};

struct DegenerateImageError : Error {
  explicit DegenerateImageError(const std::string& msg) : Error(msg) {}
};

struct SolverFailureError : Error {
  explicit SolverFailureError(const std::string& msg) : Error(msg) {}
};

struct CapExceededError : Error {
  explicit CapExceededError(const std::string& msg) : Error(msg) {}
};

struct NotSupportedError : Error {
  explicit NotSupportedError(const std::string& msg) : Error(msg) {}
};

struct EmptyMeasureError : Error {
  explicit EmptyMeasureError(const std::string& msg = "empty measure") : Error(msg) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

struct ExceptionalBaseError : Error {
  explicit ExceptionalBaseError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace pkdyn
