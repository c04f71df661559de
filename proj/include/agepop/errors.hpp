#pragma once

#include <stdexcept>
#include <string>

namespace agepop {

// Argument outside the mathematical domain of an operation (negative age,
// elapsed time larger than age, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Array/grid dimensions that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of a control/solver routine is violated
// (horizon too short for null control, singular static system, ...).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative method failed to converge or diverged.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear-algebra failure inside a solver (factorization, dichotomy, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agepop
