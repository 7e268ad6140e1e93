#pragma once

#include <stdexcept>
#include <string>

namespace dycklab {

// Every failure in this library is reported as a typed exception so callers
// (and the CLI) can distinguish bad input from internal trouble.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed values handed in by the caller: bad symbol indices, vectors that
// are not one-hot, files that do not parse, and so on.
struct InputError : Error {
  using Error::Error;
};

// A structurally broken configuration object (dimensions, rates, bounds).
struct ConfigError : Error {
  using Error::Error;
};

// The rejection sampler exhausted its attempt budget.
struct SamplingError : Error {
  using Error::Error;
};

// A hard cap (enumeration size, search frontier, expansion count) was hit.
struct ResourceError : Error {
  using Error::Error;
};

// No invalidating mutation could be produced for a word.
struct CorruptionError : Error {
  using Error::Error;
};

// A transition was requested that the (partial) automaton does not define.
struct UndefinedTransitionError : Error {
  using Error::Error;
};

// Pop from an empty stack, in either the automaton or its vector encoding.
struct StackUnderflowError : Error {
  using Error::Error;
};

// Non-finite gradients or values during optimisation; message names the
// offending parameter.
struct TrainingError : Error {
  using Error::Error;
};

// A supervision label fell outside the class range of the head being trained.
struct LabelError : InputError {
  using InputError::InputError;
};

// A sequence exceeds the positional capacity of a model.
struct LengthError : InputError {
  using InputError::InputError;
};

// File system / serialization failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace dycklab
