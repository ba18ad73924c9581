#pragma once

#include <stdexcept>
#include <string>

namespace ltgsr {

/// Precondition on an argument (shape, size, range) was violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input carries no usable signal, e.g. a constant image handed to registration.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegistrationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brute-force search refused because the patch grid is too large.
class CostGuard : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation needs state that is not there yet (e.g. an untrained checkpoint).
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss became NaN/Inf. `what()` carries the diagnostic dump.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ltgsr
