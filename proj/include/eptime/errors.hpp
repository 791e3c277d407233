#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eptime {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (shape, range, non-Hermitian input...).
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// A computation produced non-finite or otherwise unusable numbers.
class NumericalFailure : public Error {
  public:
    using Error::Error;
};

/// Integrator hit a non-finite state or failed to converge at `step`.
class DivergenceError : public NumericalFailure {
  public:
    DivergenceError(const std::string &what, std::size_t step)
        : NumericalFailure(what + " (step " + std::to_string(step) + ")"),
          step_(step) {}

    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

/// Operation requires a non-empty physical subspace.
class NoPhysicalStates : public Error {
  public:
    using Error::Error;
};

} // namespace eptime
