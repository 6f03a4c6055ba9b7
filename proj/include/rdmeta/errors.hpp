#pragma once

#include <stdexcept>
#include <string>

namespace rdmeta {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonElliptic : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct EigenUnavailable : Error {
  using Error::Error;
};
struct NonFiniteOutput : Error {
  using Error::Error;
};
struct SingularDiffusion : Error {
  using Error::Error;
};

struct BlowUp : Error {
  double time;
  explicit BlowUp(double t, const std::string& msg = "state exceeded blow-up threshold")
      : Error(msg + " at t=" + std::to_string(t)), time(t) {}
};

struct NoMerge : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct AllDiverged : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};

struct ConfigError : Error {
  std::string field;
  ConfigError(std::string f, const std::string& msg) : Error(f + ": " + msg), field(std::move(f)) {}
};
struct UnknownTask : Error {
  using Error::Error;
};
struct TaskError : Error {
  using Error::Error;
};

}  // namespace rdmeta
