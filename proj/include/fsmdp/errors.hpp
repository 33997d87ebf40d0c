#pragma once

#include <stdexcept>
#include <string>

namespace fsmdp {

/// Invalid configuration or inconsistent model structure.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A brute-force path was asked to enumerate a space larger than it allows.
class ScaleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The LP core failed (pivot budget exhausted, numerical breakdown).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed; indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fsmdp
