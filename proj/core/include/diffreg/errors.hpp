#pragma once

#include <stdexcept>
#include <string>

namespace diffreg {

/// Fields or grids with incompatible shapes were combined.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical parameter is outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed user input: non-finite coordinates, unreadable volumes, bad flags.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An interpolation plan cannot be executed on the given partition.
class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diffreg
