#pragma once

#include <stdexcept>
#include <string>

namespace tvdo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotStronglyConnected : Error {
  using Error::Error;
};

// Detail balance has no positive solution; carries a violating edge pair (0-based).
struct NotDetailBalanced : Error {
  int i = -1, j = -1;
  NotDetailBalanced(const std::string& msg, int i_, int j_) : Error(msg), i(i_), j(j_) {}
};

struct AsymmetricInput : Error {
  using Error::Error;
};

struct NonFiniteInput : Error {
  using Error::Error;
};

// State blew up during integration; step records where.
struct NonFiniteState : Error {
  long step = -1;
  NonFiniteState(const std::string& msg, long step_) : Error(msg), step(step_) {}
};

struct SingularHessian : Error {
  using Error::Error;
};

struct SingularEstimatorMatrix : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  double residual = 0;
  NoConvergence(const std::string& msg, double residual_) : Error(msg), residual(residual_) {}
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct EmptySample : Error {
  using Error::Error;
};

struct InvalidExponents : Error {
  using Error::Error;
};

struct InvalidTheta : Error {
  using Error::Error;
};

// Config rejected; pointer is a JSON pointer to the offending key.
struct ConfigInvalid : Error {
  std::string pointer;
  ConfigInvalid(const std::string& msg, std::string pointer_)
      : Error(msg + " (at " + pointer_ + ")"), pointer(std::move(pointer_)) {}
};

}  // namespace tvdo
